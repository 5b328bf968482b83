"""Eigenstate-value figure: one panel per system level showing the noisy
per-eigenstate populations against eigenstate energy, their moving average,
the thermal reference (dashed), the steady-state value (solid), and a dashed
box marking where the initial state lives in the spectrum."""

from __future__ import annotations

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import (
    FigureInputError,
    read_eth_csv,
    read_json,
    read_overlap_csv,
    thermal_populations,
)
from .spec import FigureSpec


def mass_interval(energy: np.ndarray, weight: np.ndarray, mass: float = 0.99):
    """Smallest energy interval holding `mass` of the total weight.

    Two-pointer sweep over the (already energy-ordered) weight table.
    """
    total = weight.sum()
    if total <= 0:
        raise FigureInputError("overlap column has no weight")
    target = mass * total
    best = (energy[0], energy[-1])
    best_width = energy[-1] - energy[0]
    acc = 0.0
    lo = 0
    for hi in range(len(weight)):
        acc += weight[hi]
        while acc - weight[lo] >= target:
            acc -= weight[lo]
            lo += 1
        if acc >= target:
            width = energy[hi] - energy[lo]
            if width < best_width:
                best_width = width
                best = (energy[lo], energy[hi])
    return best


def plot_eth(spec: FigureSpec) -> str:
    """Render the d-panel figure and return the output path."""
    if spec.eth_path is None:
        raise FigureInputError("missing ETH CSV")
    if spec.summary_path is None:
        raise FigureInputError("missing summary JSON")
    table = read_eth_csv(spec.eth_path)
    summary = read_json(spec.summary_path)
    thermal = thermal_populations(summary, spec.summary_path)
    steady = summary.get("steady_state", summary.get("diagonal_ensemble", {}))
    if "populations" not in steady:
        raise FigureInputError(f"{spec.summary_path}: no steady-state populations entry")
    steady = np.asarray(steady["populations"], dtype=float)
    overlaps = [read_overlap_csv(p) for p in spec.overlap_paths]

    energy = table["energy"]
    q, ma = table["q"], table["ma"]
    d = q.shape[1]
    if thermal.shape[0] != d or steady.shape[0] != d:
        raise FigureInputError("summary level count does not match ETH CSV")

    n_cols = 2 if d > 1 else 1
    n_rows = (d + n_cols - 1) // n_cols
    fig, axes = plt.subplots(n_rows, n_cols, figsize=(5.4 * n_cols, 3.4 * n_rows),
                             squeeze=False)
    for s in range(d):
        ax = axes[s // n_cols][s % n_cols]
        ax.plot(energy, q[:, s], color="0.15", lw=0.4, alpha=0.8, label="eigenstate value")
        ax.plot(energy, ma[:, s], color="0.65", lw=1.6, label="moving average")
        ax.axhline(thermal[s], color="tab:red", ls="--", lw=1.2, label="thermal")
        ax.axhline(steady[s], color="tab:blue", ls="-", lw=1.2, label="steady state")
        if s == 0:
            # dashed box per overlap file: where the initial state sits
            top = min(1.0, float(q[:, s].max()))
            for ov in overlaps:
                lo, hi = mass_interval(ov["energy"], ov["overlap"])
                width = max(hi - lo, 1e-9)
                ax.add_patch(plt.Rectangle((lo, 0.0), width, top, fill=False,
                                           ls="--", lw=1.0, edgecolor="0.3"))
            ax.legend(loc="upper right", fontsize=7)
        ax.set_xlabel(r"$E_k$  [$\hbar\mu$]")
        ax.set_ylabel(f"level {s + 1} population")
        ax.set_ylim(bottom=0.0)
    for panel in range(d, n_rows * n_cols):
        axes[panel // n_cols][panel % n_cols].axis("off")
    fig.tight_layout()
    fig.savefig(spec.out_path)
    plt.close(fig)
    return str(spec.out_path)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Per-level eigenstate-value panels with moving average, "
                    "thermal and steady-state lines, and overlap boxes"
    )
    parser.add_argument("--eth", required=True, help="eigenstate-values CSV")
    parser.add_argument("--overlap", action="append", default=[],
                        help="overlap CSV (repeatable, one box per file)")
    parser.add_argument("--summary", required=True,
                        help="summary JSON (thermal + steady state)")
    parser.add_argument("--out", required=True, help="output image (.svg or .pdf)")
    args = parser.parse_args(argv)
    spec = FigureSpec(
        out_path=args.out,
        eth_path=args.eth,
        overlap_paths=args.overlap,
        summary_path=args.summary,
    )
    try:
        print(plot_eth(spec))
    except FigureInputError as exc:
        print(f"error: {exc}")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
