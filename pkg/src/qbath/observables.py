"""System-level observables: populations, reduced density matrix, thermal
reference, diagonal ensemble, and population time series with conservation
columns.

Under the system-major joint index, the population of system level s is a
contiguous block reduction: p_s = sum_b |psi_{(s,b)}|^2.  The energy column
of a time series is evaluated in the product basis (diagonal part plus the
interaction quadratic form), which makes energy conservation an actual check
on the propagation instead of an identity of the eigenbasis representation.
"""

from __future__ import annotations

import concurrent.futures
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import spectral
from .bath import BathRealization
from .model import SystemSpec
from .spectral import SpectralDecomposition, UniverseState
from .universe import diagonal_energies


@dataclass(frozen=True, eq=False)
class PopulationSeries:
    """Per-time system populations plus conservation diagnostics."""

    times: np.ndarray          # (T,)
    populations: np.ndarray    # (T, d)
    energy: np.ndarray         # (T,)
    norm: np.ndarray           # (T,)

    @property
    def d(self) -> int:
        return self.populations.shape[1]


@dataclass(frozen=True, eq=False)
class ThermalReference:
    """Boltzmann populations exp(-beta E_s)/Z for the system levels."""

    beta: float
    populations: np.ndarray
    z: float


def populations(state: UniverseState | np.ndarray, d: int) -> np.ndarray:
    """p_s = sum_b |psi_{(s,b)}|^2 (block reduction over the bath index)."""
    a = state.amplitudes if isinstance(state, UniverseState) else np.asarray(state)
    blocks = a.reshape(d, -1)
    return (blocks.real**2 + blocks.imag**2).sum(axis=1) if np.iscomplexobj(blocks) \
        else (blocks**2).sum(axis=1)


def reduced_density_matrix(state: UniverseState | np.ndarray, d: int) -> np.ndarray:
    """rho_{ss'} = sum_b psi_{(s,b)} conj(psi_{(s',b)}); Hermitian, unit trace, PSD."""
    a = state.amplitudes if isinstance(state, UniverseState) else np.asarray(state)
    blocks = a.reshape(d, -1)
    return blocks @ blocks.conj().T


def boltzmann(system: SystemSpec, beta: float) -> ThermalReference:
    """Thermal reference populations; invariant under a global energy shift."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    e = system.energies
    shifted = np.exp(-beta * (e - e.min()))
    z_shifted = shifted.sum()
    z = float(z_shifted * np.exp(-beta * e.min()))
    return ThermalReference(beta=beta, populations=shifted / z_shifted, z=z)


def diagonal_ensemble(overlaps: np.ndarray, eigenstate_values: np.ndarray) -> np.ndarray:
    """Long-time-average prediction: pbar_s = sum_k O_k q_s(k)."""
    return overlaps @ eigenstate_values


def energy_expectation(
    psi: np.ndarray,
    system: SystemSpec,
    bath: BathRealization,
    g: float,
    diag: np.ndarray | None = None,
) -> float:
    """<psi|H|psi> evaluated in the product basis.

    Uses the structure of H (diagonal energies plus g * X (x) Y) rather than a
    materialized dense matrix, so it stays cheap at evolution time:
    <X (x) Y> = sum conj(A) * (x @ A @ y) with A the (d, N) reshape of psi.
    """
    d, n = system.d, bath.n
    if diag is None:
        diag = diagonal_energies(system, bath.levels)
    abs2 = psi.real**2 + psi.imag**2
    value = float(diag @ abs2)
    if g != 0.0:
        a = psi.reshape(d, n)
        xa = system.x @ a
        # xa @ y via (y @ xa.T).T, valid because y is symmetric
        xay = spectral._real_dot(bath.y, xa.T).T
        value += g * float(np.sum(a.conj() * xay).real)
    return value


def _series_chunk(
    sd: SpectralDecomposition,
    coeff: np.ndarray,
    times: np.ndarray,
    system: SystemSpec,
    bath: BathRealization,
    g: float,
    diag: np.ndarray,
):
    """Populations, energy and norm for one block of time points."""
    d, n = system.d, bath.n
    psi_block = spectral.reconstruct_grid(sd, coeff, times)       # (dim, Tc)
    abs2 = psi_block.real**2 + psi_block.imag**2
    norms = np.sqrt(abs2.sum(axis=0))
    pops = abs2.reshape(d, n, -1).sum(axis=1).T                   # (Tc, d)
    energies = diag @ abs2
    if g != 0.0:
        a = psi_block.reshape(d, n, -1)
        tc = a.shape[2]
        # x @ A @ y per time column, batched as real matmuls
        xa = np.tensordot(system.x, a, axes=([1], [0]))           # (d, n, Tc)
        flat = np.ascontiguousarray(xa.transpose(0, 2, 1)).reshape(d * tc, n)
        # flat @ y via (y @ flat.T).T, valid because y is symmetric
        flat_y = spectral._real_dot(bath.y, flat.T).T
        xay = flat_y.reshape(d, tc, n).transpose(0, 2, 1)         # (d, n, Tc)
        energies = energies + g * np.einsum("snt,snt->t", a.conj(), xay).real
    return pops, energies, norms


def population_series(
    sd: SpectralDecomposition,
    state0: UniverseState,
    times: np.ndarray,
    system: SystemSpec,
    bath: BathRealization,
    g: float,
    threads: int = 1,
    chunk_size: int = 128,
) -> PopulationSeries:
    """Evaluate p_s(t), <H>(t) and ||psi(t)|| on a time grid.

    Time points are processed in fixed chunks written to disjoint slots, so
    the result is bitwise independent of the thread count.  threads counts
    outer workers over chunks; 0 (auto) resolves to 1 because the dense
    algebra inside each chunk is already BLAS-threaded, and extra outer
    workers would just oversubscribe the BLAS pool.
    """
    times = np.asarray(times, dtype=float)
    coeff = spectral.eigen_coefficients(sd, state0)
    diag = diagonal_energies(system, bath.levels)
    t_count = times.shape[0]
    d = system.d
    pops = np.empty((t_count, d))
    energy = np.empty(t_count)
    norm = np.empty(t_count)

    slices = [slice(i, min(i + chunk_size, t_count)) for i in range(0, t_count, chunk_size)]

    def work(sl):
        p, e, nn = _series_chunk(sd, coeff, times[sl], system, bath, g, diag)
        pops[sl] = p
        energy[sl] = e
        norm[sl] = nn

    if threads == 0:
        threads = 1
    if threads <= 1 or len(slices) <= 1:
        for sl in slices:
            work(sl)
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, slices))
    return PopulationSeries(times=times, populations=pops, energy=energy, norm=norm)


def steady_statistics(
    series: PopulationSeries, t_start: float
) -> tuple[np.ndarray, np.ndarray]:
    """Per-level time mean and standard deviation over t >= t_start."""
    mask = series.times >= t_start - 1e-12
    count = int(mask.sum())
    if count < 30:
        raise ValueError(f"only {count} samples at t >= {t_start}; need at least 30")
    window = series.populations[mask]
    return window.mean(axis=0), window.std(axis=0)


# ---------------------------------------------------------------------------
# CSV output (17 significant digits: values round-trip through text exactly)
# ---------------------------------------------------------------------------

def write_populations_csv(path, series: PopulationSeries) -> None:
    cols = ["t"] + [f"p{s + 1}" for s in range(series.d)] + ["energy", "norm"]
    data = np.column_stack(
        [series.times, series.populations, series.energy, series.norm]
    )
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(cols), comments="")


def read_populations_csv(path) -> PopulationSeries:
    header = Path(path).open(encoding="utf-8").readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    d = len(header) - 3
    return PopulationSeries(
        times=data[:, 0],
        populations=data[:, 1:1 + d],
        energy=data[:, 1 + d],
        norm=data[:, 2 + d],
    )
