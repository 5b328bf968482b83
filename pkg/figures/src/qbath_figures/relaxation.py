"""Population relaxation figure: one panel per initial state, horizontal
thermal reference lines, and an early-time inset in each panel."""

from __future__ import annotations

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .io import FigureInputError, read_json, read_populations_csv, thermal_populations
from .spec import FigureSpec

_LEVEL_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red",
                 "tab:purple", "tab:brown")


def _panel(ax, series, thermal, inset_t_max, title):
    t = series["t"]
    pops = series["populations"]
    d = pops.shape[1]
    if thermal.shape[0] != d:
        raise FigureInputError(
            f"thermal reference has {thermal.shape[0]} levels, populations CSV has {d}"
        )
    for s in range(d):
        color = _LEVEL_COLORS[s % len(_LEVEL_COLORS)]
        ax.plot(t, pops[:, s], color=color, lw=0.8, label=f"level {s + 1}")
        ax.axhline(thermal[s], color=color, lw=1.0, ls="--", alpha=0.7)
    ax.set_xlim(t.min(), t.max() if t.max() > t.min() else t.min() + 1.0)
    ax.set_ylim(0.0, 1.05)
    ax.set_xlabel(r"$t$  [$1/\mu$]")
    ax.set_ylabel("population")
    ax.set_title(title)

    if inset_t_max is None:
        inset_t_max = t.min() + 0.05 * (t.max() - t.min())
    mask = t <= inset_t_max
    if mask.sum() >= 2:
        inset = ax.inset_axes([0.55, 0.55, 0.42, 0.4])
        for s in range(d):
            color = _LEVEL_COLORS[s % len(_LEVEL_COLORS)]
            inset.plot(t[mask], pops[mask, s], color=color, lw=0.8)
            inset.axhline(thermal[s], color=color, lw=0.8, ls="--", alpha=0.7)
        inset.set_xlim(t[mask].min(), t[mask].max())
        inset.set_ylim(0.0, 1.05)
        inset.tick_params(labelsize=7)


def plot_relaxation(spec: FigureSpec) -> str:
    """Render the figure and return the output path."""
    if len(spec.populations_paths) < 1:
        raise FigureInputError("need at least one populations CSV")
    if spec.thermal_path is None:
        raise FigureInputError("missing thermal JSON")
    thermal = thermal_populations(read_json(spec.thermal_path), spec.thermal_path)
    series_list = [read_populations_csv(p) for p in spec.populations_paths]

    n_panels = len(series_list)
    fig, axes = plt.subplots(1, n_panels, figsize=(6.0 * n_panels, 4.2), squeeze=False)
    labels = "ab"
    for i, (ax, series) in enumerate(zip(axes[0], series_list)):
        title = f"({labels[i % 2]})" if n_panels > 1 else ""
        _panel(ax, series, thermal, spec.inset_t_max, title)
    axes[0][0].legend(loc="center right", fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.out_path)
    plt.close(fig)
    return str(spec.out_path)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Two-panel population relaxation figure with thermal lines and insets"
    )
    parser.add_argument("--populations", action="append", required=True,
                        help="populations CSV (repeat once per initial state)")
    parser.add_argument("--thermal", required=True, help="thermal reference JSON")
    parser.add_argument("--out", required=True, help="output image (.svg or .pdf)")
    parser.add_argument("--inset-t-max", type=float, default=None,
                        help="inset time range upper edge (default: 5%% of horizon)")
    args = parser.parse_args(argv)
    spec = FigureSpec(
        out_path=args.out,
        populations_paths=args.populations,
        thermal_path=args.thermal,
        inset_t_max=args.inset_t_max,
    )
    try:
        print(plot_relaxation(spec))
    except FigureInputError as exc:
        print(f"error: {exc}")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
