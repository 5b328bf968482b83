"""Universe Hamiltonian over the joint system x bath product basis.

Joint index convention: k = s*N + b (system-major), so each system level owns
one contiguous block of N bath entries and population sums are contiguous
range reductions.  The full matrix is

    h[(s,b),(s',b')] = delta_ss' delta_bb' (E_s + eps_b) + g * x[s][s'] * y[b][b']

which is exactly symmetric by construction and has the bare energies on the
diagonal (x and y both have zero diagonals).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bath import BathRealization
from .model import MemoryLimitError, SystemSpec


@dataclass(frozen=True, eq=False)
class UniverseHamiltonian:
    dim: int
    n_system: int
    n_bath: int
    h: np.ndarray


def joint_index(s: int, b: int, n_bath: int) -> int:
    if not 0 <= b < n_bath:
        raise ValueError(f"bath index {b} outside [0, {n_bath})")
    if s < 0:
        raise ValueError(f"system index {s} negative")
    return s * n_bath + b


def split_index(k: int, n_bath: int) -> tuple[int, int]:
    if k < 0:
        raise ValueError(f"joint index {k} negative")
    return k // n_bath, k % n_bath


def memory_estimate_bytes(dim: int) -> int:
    """Bytes needed to build and diagonalize a dim x dim symmetric matrix.

    The matrix itself plus the divide-and-conquer eigensolver workspace
    (about two further dense copies), plus O(dim) vectors.
    """
    return 3 * 8 * dim * dim + 64 * dim


def diagonal_energies(system: SystemSpec, levels: np.ndarray) -> np.ndarray:
    """E_s + eps_b over the joint index, i.e. the g = 0 spectrum."""
    return np.repeat(system.energies, levels.shape[0]) + np.tile(levels, system.d)


def assemble(
    system: SystemSpec,
    bath: BathRealization,
    g: float,
    memory_ceiling: int | None = None,
) -> UniverseHamiltonian:
    """Materialize the dense universe Hamiltonian.

    Fails fast with a MemoryLimitError (reporting the required bytes) when a
    ceiling is given and the estimate exceeds it.
    """
    d, n = system.d, bath.n
    dim = d * n
    estimate = memory_estimate_bytes(dim)
    if memory_ceiling is not None and estimate > memory_ceiling:
        raise MemoryLimitError(estimate, memory_ceiling)

    h = np.zeros((dim, dim))
    for s in range(d):
        for s2 in range(d):
            coeff = g * system.x[s, s2]
            if coeff != 0.0:
                h[s * n:(s + 1) * n, s2 * n:(s2 + 1) * n] = coeff * bath.y
    k = np.arange(dim)
    h[k, k] = diagonal_energies(system, bath.levels)
    return UniverseHamiltonian(dim=dim, n_system=d, n_bath=n, h=h)
