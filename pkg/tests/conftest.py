"""Session fixtures for the acceptance experiments.

The desk-scale setup reuses the reference bath's level ladder truncated to a
smaller state count: e_max is chosen so that the inverse-CDF placement at
n_states reproduces the first n_states levels of the reference 5000-state
bath, keeping the density of states (and hence all local level spacings)
identical to the reference at every energy.
"""

import json
import os
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from qbath import bath, eth, model, observables, spectral, universe

REFERENCE = dict(beta=0.4, e_min=3.0, e_max=20.0465, n_states=5000)

# 200 contiguous window states starting at ladder index 200: energies about
# [12.1, 13.8], mid-spectrum in energy with >= 3.5 of bath headroom on both
# sides so every system transition can exchange energy within the bath range
DESK_WINDOW = (200, 200)
DESK_G = 0.01
DESK_T_MAX = 2000.0
DESK_N_STEPS = 2000
COUPLING_SEED = 101
PHASE_SEED = 202


def desk_bath_spec(n_states: int) -> model.BathSpec:
    beta, e_min = REFERENCE["beta"], REFERENCE["e_min"]
    q = np.expm1(beta * (REFERENCE["e_max"] - e_min))
    e_max = e_min + np.log1p((n_states - 1) / (REFERENCE["n_states"] - 1) * q) / beta
    return model.BathSpec(
        n_states=n_states, e_min=e_min, e_max=float(e_max), beta=beta,
        eta_factor=100.0, coupling_seed=COUPLING_SEED,
    )


def _log(msg: str) -> None:
    print(f"[acceptance setup] {msg}", file=sys.stderr, flush=True)


class DeskRun:
    """Everything the acceptance criteria need from the desk-scale experiments."""

    def __init__(self):
        cfg = model.default_paper_config()
        self.system = cfg.system
        self.thermal = observables.boltzmann(self.system, REFERENCE["beta"])

        # smaller bath first: only its ETH profile is kept
        t0 = time.perf_counter()
        spec_1000 = desk_bath_spec(1000)
        br_1000 = bath.realize(spec_1000)
        sd_1000 = spectral.diagonalize(
            universe.assemble(self.system, br_1000, DESK_G), overwrite=True
        )
        self.profile_1000 = eth.build_profile(sd_1000, self.system.d, 50)
        _log(f"N=1000 profile in {time.perf_counter() - t0:.0f} s")
        del sd_1000, br_1000

        t0 = time.perf_counter()
        self.bath_spec = desk_bath_spec(2000)
        self.bath = bath.realize(self.bath_spec)
        sd = spectral.diagonalize(
            universe.assemble(self.system, self.bath, DESK_G), overwrite=True
        )
        _log(f"N=2000 diagonalization in {time.perf_counter() - t0:.0f} s")

        self.profile = eth.build_profile(sd, self.system.d, 50)
        self.times = DESK_T_MAX * np.arange(DESK_N_STEPS + 1) / DESK_N_STEPS

        # non-perturbative coupling condition of the experiment definition:
        # typical interaction element vs mean bath spacing inside the window
        first, count = DESK_WINDOW
        window_slice = slice(first, first + count)
        window_gaps = np.diff(self.bath.levels[window_slice])
        y_window = self.bath.y[window_slice, window_slice]
        x_off = self.system.x[np.triu_indices(self.system.d, k=1)]
        typical_element = DESK_G * np.sqrt(np.mean(x_off**2)) * np.sqrt(np.mean(y_window**2))
        self.coupling_vs_spacing = float(typical_element / window_gaps.mean())

        self.series = {}
        self.overlaps = {}
        self.diag_ensemble = {}
        for s0 in (0, 3):
            t0 = time.perf_counter()
            init = model.InitialCondition(
                system_level=s0, by_index=DESK_WINDOW, phase_seed=PHASE_SEED
            )
            psi0 = spectral.prepare_initial(self.system, self.bath, init)
            self.series[s0] = observables.population_series(
                sd, psi0, self.times, self.system, self.bath, DESK_G
            )
            ov = spectral.overlap_distribution(sd, psi0)
            self.overlaps[s0] = ov
            self.diag_ensemble[s0] = observables.diagonal_ensemble(
                ov, self.profile.eigenstate_values
            )
            _log(f"s0={s0} evolution in {time.perf_counter() - t0:.0f} s")
        self.eigenvalues = sd.eigenvalues.copy()
        del sd

    def steady(self, s0: int):
        return observables.steady_statistics(self.series[s0], DESK_T_MAX / 2)


def _export_artifacts(run: DeskRun, out_dir: Path) -> None:
    """CSV/JSON files in the CLI's formats, consumed by the figure scripts."""
    out_dir.mkdir(parents=True, exist_ok=True)
    observables.write_populations_csv(out_dir / "populations_s1.csv", run.series[0])
    observables.write_populations_csv(out_dir / "populations_s4.csv", run.series[3])
    eth.write_eth_csv(out_dir / "eth.csv", run.profile)
    eth.write_overlap_csv(out_dir / "overlap_s1.csv", run.profile.eigen_energies,
                          run.overlaps[0])
    eth.write_overlap_csv(out_dir / "overlap_s4.csv", run.profile.eigen_energies,
                          run.overlaps[3])
    thermal = {
        "beta": run.thermal.beta,
        "z": run.thermal.z,
        "populations": run.thermal.populations.tolist(),
    }
    (out_dir / "thermal.json").write_text(json.dumps(thermal, indent=2) + "\n")
    k_range = eth.central_range(run.profile.dim)
    max_dev, rms = eth.eth_deviation(run.profile, run.thermal, k_range)
    mean4, _ = run.steady(3)
    summary = {
        "thermal": thermal,
        "eth_deviation": {
            "k_range": list(k_range),
            "max_abs_dev_of_ma": max_dev.tolist(),
            "rms_fluctuation": rms.tolist(),
        },
        "g0_counting": {
            "energy_window": [float(run.bath.levels[DESK_WINDOW[0]]),
                              float(run.bath.levels[sum(DESK_WINDOW) - 1])],
            "fractions": eth.g0_counting_check(
                run.system, run.bath.levels,
                (float(run.bath.levels[DESK_WINDOW[0]]),
                 float(run.bath.levels[sum(DESK_WINDOW) - 1])),
            ).tolist(),
        },
        "diagonal_ensemble": {"populations": run.diag_ensemble[3].tolist()},
        "steady_state": {"initial_level": 4, "populations": mean4.tolist()},
        "ma_window": run.profile.window,
    }
    (out_dir / "eth_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    _log(f"artifacts exported to {out_dir}")


@pytest.fixture(scope="session")
def desk(request) -> DeskRun:
    run = DeskRun()
    artifacts = os.environ.get(
        "QBATH_ACCEPTANCE_DIR", str(Path(__file__).parents[1] / "runs" / "acceptance")
    )
    _export_artifacts(run, Path(artifacts))
    return run


def criterion(name: str, ok: bool, detail: str) -> None:
    """One pass/fail line per acceptance criterion (visible with pytest -s)."""
    print(f"{name} {'PASS' if ok else 'FAIL'}: {detail}", flush=True)
    assert ok, f"{name}: {detail}"
