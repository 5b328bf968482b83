"""Eigenstate-thermalization diagnostics.

For each universe eigenstate k, the "eigenstate value" q_s(k) is the system
population obtained by tracing the bath out of that single eigenstate:
q_s(k) = sum_b V[(s,b), k]^2 (V is real).  The central diagnostic smooths
q over a window of adjacent eigenstates (by index, not energy) and compares
the smoothed curve against the Boltzmann populations level by level.

The uncoupled counting check provides an independent route to the same
thermal target: with g = 0 the universe spectrum is {E_s + eps_b}, and the
fraction of product levels in an energy window that belongs to system level
s tends to exp(-beta E_s)/Z purely because the bath level count in a shifted
window scales as exp(-beta E_s).  No diagonalization is involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import SystemSpec, normalize_ma_window
from .observables import ThermalReference
from .spectral import SpectralDecomposition


@dataclass(frozen=True, eq=False)
class EthProfile:
    """Per-eigenstate reduced populations and their moving average."""

    eigen_energies: np.ndarray     # (D,)
    eigenstate_values: np.ndarray  # (D, d)
    moving_average: np.ndarray     # (D, d)
    window: int

    @property
    def dim(self) -> int:
        return self.eigen_energies.shape[0]

    @property
    def d(self) -> int:
        return self.eigenstate_values.shape[1]


def eigenstate_values(sd: SpectralDecomposition, d: int) -> np.ndarray:
    """q_s(k) = sum_b V[(s,b), k]^2, rows ordered by ascending eigenstate energy."""
    v = sd.eigenvectors
    dim = v.shape[0]
    n = dim // d
    q = np.empty((dim, d))
    for s in range(d):
        block = v[s * n:(s + 1) * n, :]
        q[:, s] = np.einsum("bk,bk->k", block, block)
    return q


def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average over the eigenstate index.

    The window is normalized to the nearest odd integer >= window.  Near the
    boundaries the window shrinks symmetrically (half-width min(h, k, D-1-k))
    so every output stays centered on its own index.
    """
    values = np.asarray(values, dtype=float)
    flat = values.ndim == 1
    if flat:
        values = values[:, None]
    dim = values.shape[0]
    if window < 1:
        raise ValueError("window must be >= 1")
    w = normalize_ma_window(window)
    if w == 1:
        out = values.copy()
        return out[:, 0] if flat else out
    h = (w - 1) // 2
    k = np.arange(dim)
    hk = np.minimum(h, np.minimum(k, dim - 1 - k))
    cs = np.vstack([np.zeros((1, values.shape[1])), np.cumsum(values, axis=0)])
    out = (cs[k + hk + 1] - cs[k - hk]) / (2 * hk + 1)[:, None]
    return out[:, 0] if flat else out


def build_profile(sd: SpectralDecomposition, d: int, window: int) -> EthProfile:
    q = eigenstate_values(sd, d)
    w = normalize_ma_window(window)
    return EthProfile(
        eigen_energies=sd.eigenvalues.copy(),
        eigenstate_values=q,
        moving_average=moving_average(q, w),
        window=w,
    )


def central_range(dim: int, fraction: float = 0.5) -> tuple[int, int]:
    """Symmetric index range holding the central `fraction` of the spectrum."""
    lo = int(round(dim * (1 - fraction) / 2))
    return lo, dim - lo


def eth_deviation(
    profile: EthProfile, thermal: ThermalReference, k_range: tuple[int, int]
) -> tuple[np.ndarray, np.ndarray]:
    """Per level: max |MA_s(k) - p_s^th| over the range, and rms of q_s - MA_s."""
    lo, hi = k_range
    if not 0 <= lo < hi <= profile.dim:
        raise ValueError(f"empty or out-of-range index range [{lo}, {hi})")
    ma = profile.moving_average[lo:hi]
    q = profile.eigenstate_values[lo:hi]
    max_dev = np.abs(ma - thermal.populations[None, :]).max(axis=0)
    rms = np.sqrt(np.mean((q - ma) ** 2, axis=0))
    return max_dev, rms


def fluctuation_rms(profile: EthProfile, k_range: tuple[int, int] | None = None) -> float:
    """Scalar rms of (q - MA) over all levels in the range (default: central 50%)."""
    if k_range is None:
        k_range = central_range(profile.dim)
    lo, hi = k_range
    diff = profile.eigenstate_values[lo:hi] - profile.moving_average[lo:hi]
    return float(np.sqrt(np.mean(diff**2)))


def fluctuation_scaling(profiles, k_ranges=None) -> list[float]:
    """Mid-spectrum rms fluctuation per profile (one entry per bath size)."""
    if k_ranges is None:
        k_ranges = [None] * len(profiles)
    return [fluctuation_rms(p, r) for p, r in zip(profiles, k_ranges)]


def g0_counting_check(
    system: SystemSpec, levels: np.ndarray, energy_window: tuple[float, float]
) -> np.ndarray:
    """Fraction of uncoupled product levels in the window per system level.

    Operates directly on the product spectrum {E_s + eps_b}; the window is
    inclusive.  Requires at least 10*d product levels in the window to be
    statistically meaningful.
    """
    lo, hi = energy_window
    counts = np.empty(system.d)
    for s, e_s in enumerate(system.energies):
        first = np.searchsorted(levels, lo - e_s, side="left")
        stop = np.searchsorted(levels, hi - e_s, side="right")
        counts[s] = stop - first
    total = counts.sum()
    if total < 10 * system.d:
        raise ValueError(
            f"window [{lo}, {hi}] holds only {int(total)} product levels; "
            f"need at least {10 * system.d}"
        )
    return counts / total


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def write_eth_csv(path, profile: EthProfile) -> None:
    d = profile.d
    cols = ["k", "E_k"] + [f"q{s + 1}" for s in range(d)] + [f"ma{s + 1}" for s in range(d)]
    data = np.column_stack(
        [
            np.arange(profile.dim),
            profile.eigen_energies,
            profile.eigenstate_values,
            profile.moving_average,
        ]
    )
    fmt = ["%d"] + ["%.17g"] * (1 + 2 * d)
    np.savetxt(path, data, fmt=fmt, delimiter=",", header=",".join(cols), comments="")


def write_overlap_csv(path, eigen_energies: np.ndarray, overlaps: np.ndarray) -> None:
    data = np.column_stack([np.arange(eigen_energies.shape[0]), eigen_energies, overlaps])
    np.savetxt(
        path, data, fmt=["%d", "%.17g", "%.17g"], delimiter=",",
        header="k,E_k,overlap", comments="",
    )
