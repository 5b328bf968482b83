"""Bath construction: level ladder with exponential density of states and the
random symmetric coupling matrix.

Level placement (density D(E) proportional to exp(beta*E)):

* ``inverse_cdf``:  eps_i = e_min + (1/beta) * ln(1 + (i/(N-1)) * (exp(beta*(e_max-e_min)) - 1)).
  Hits both endpoints exactly and puts a fraction (exp(beta*b) - exp(beta*a))
  / (exp(beta*e_max) - exp(beta*e_min)) of the levels into any [a, b].
* ``recursive_spacing``:  eps_0 = e_min, eps_{i+1} = eps_i + exp(-beta*eps_i).
  Realizes delta_eps0 = exp(-beta*e_min) as the literal first gap and ignores
  e_max (the realized maximum is reported in the run manifest).

Coupling matrix, for i < j:

    y[i][j] = (1 + eta_factor * sqrt(fwd_gap_i * bwd_gap_j)) * w_ij

with fwd_gap_i = eps_{i+1} - eps_i, bwd_gap_j = eps_j - eps_{j-1}, and w_ij
standard Gaussian draws taken in row-major order over the strict upper
triangle from the coupling_seed stream.  The lower triangle is mirrored and
the diagonal is zero, so the matrix is exactly symmetric.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rng
from .model import BathSpec, CacheError, InitialCondition, bath_spec_hash

_QBR_MAGIC = b"QBR1"


@dataclass(frozen=True, eq=False)
class BathRealization:
    """Concrete bath: ascending level energies plus the coupling matrix y."""

    levels: np.ndarray
    y: np.ndarray
    spec: BathSpec

    @property
    def n(self) -> int:
        return self.levels.shape[0]

    @property
    def delta_eps0_const(self) -> float:
        return self.spec.delta_eps0


def place_levels(spec: BathSpec) -> np.ndarray:
    """Ascending level energies for the given placement rule (plus optional jitter)."""
    n = spec.n_states
    if n < 2:
        raise ValueError("need at least 2 bath states")
    beta = spec.beta
    if spec.placement == "inverse_cdf":
        frac = np.arange(n) / (n - 1)
        levels = spec.e_min + np.log1p(frac * np.expm1(beta * (spec.e_max - spec.e_min))) / beta
        # pin the endpoints exactly (log1p/expm1 round-trip can be off by an ulp)
        levels[0] = spec.e_min
        levels[-1] = spec.e_max
    elif spec.placement == "recursive_spacing":
        levels = np.empty(n)
        e = spec.e_min
        for i in range(n):
            levels[i] = e
            e += np.exp(-beta * e)
    else:
        raise ValueError(f"unknown placement rule {spec.placement!r}")

    if spec.level_jitter > 0:
        local = np.empty(n)
        local[1:-1] = (levels[2:] - levels[:-2]) / 2
        local[0] = levels[1] - levels[0]
        local[-1] = levels[-1] - levels[-2]
        u = rng.uniform_centered(rng.stream(spec.coupling_seed, rng.JITTER_STREAM), n)
        levels = np.sort(levels + spec.level_jitter * local * u)
    return levels


def gaps(levels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward and backward gap lists.

    forward[i] = eps_{i+1} - eps_i for i in [0, N-1); backward holds the gap
    below each level j >= 1, i.e. backward[j-1] = eps_j - eps_{j-1}.  Both
    views share the same differences; they are returned separately because
    the coupling formula indexes rows by forward gap and columns by backward
    gap (always applied with i < j, then mirrored).
    """
    if levels.shape[0] < 2:
        raise ValueError("need at least 2 levels")
    d = np.diff(levels)
    return d, d.copy()


def build_coupling(spec: BathSpec, levels: np.ndarray) -> np.ndarray:
    """Random symmetric coupling matrix with gap-scaled variance (zero diagonal)."""
    n = levels.shape[0]
    forward, backward = gaps(levels)
    iu, ju = np.triu_indices(n, k=1)
    # forward gap of row i, backward gap of column j (valid: i < j implies
    # i <= n-2 and j >= 1)
    prefactor = 1.0 + spec.eta_factor * np.sqrt(forward[iu] * backward[ju - 1])
    w = rng.standard_normal(rng.stream(spec.coupling_seed, rng.COUPLING_STREAM), iu.shape[0])
    y = np.zeros((n, n))
    y[iu, ju] = prefactor * w
    y[ju, iu] = y[iu, ju]
    return y


def realize(spec: BathSpec) -> BathRealization:
    levels = place_levels(spec)
    return BathRealization(levels=levels, y=build_coupling(spec, levels), spec=spec)


def resolve_window(levels: np.ndarray, initial: InitialCondition) -> tuple[int, int]:
    """Resolve the initial bath window to (first_index, count).

    by_index wins when both descriptors are present.  An energy window is
    inclusive at both ends and must contain at least one level.
    """
    n = levels.shape[0]
    if initial.by_index is not None:
        first, count = initial.by_index
        if first < 0 or count < 1 or first + count > n:
            raise ValueError(f"window [{first}, {first + count}) outside [0, {n})")
        return int(first), int(count)
    if initial.by_energy is None:
        raise ValueError("no bath window given")
    lo, hi = initial.by_energy
    first = int(np.searchsorted(levels, lo, side="left"))
    stop = int(np.searchsorted(levels, hi, side="right"))
    if stop <= first:
        raise ValueError(f"no bath levels inside energy window [{lo}, {hi}]")
    return first, stop - first


# ---------------------------------------------------------------------------
# binary cache (regenerable; used only to skip reconstruction)
# ---------------------------------------------------------------------------

def save_realization(path, realization: BathRealization) -> None:
    """Dump to the QBR1 format: magic, N, spec hash, levels, upper triangle of y."""
    n = realization.n
    iu = np.triu_indices(n, k=1)
    with open(path, "wb") as f:
        f.write(_QBR_MAGIC)
        f.write(struct.pack("<Q", n))
        f.write(bath_spec_hash(realization.spec))
        f.write(realization.levels.astype("<f8").tobytes())
        f.write(np.ascontiguousarray(realization.y[iu], dtype="<f8").tobytes())


def load_realization(path, spec: BathSpec) -> BathRealization:
    """Load a QBR1 dump; the stored spec hash must match the given spec."""
    path = Path(path)
    if not path.exists():
        raise CacheError(f"bath cache {path} not found")
    with open(path, "rb") as f:
        if f.read(4) != _QBR_MAGIC:
            raise CacheError(f"{path}: bad magic")
        (n,) = struct.unpack("<Q", f.read(8))
        if f.read(32) != bath_spec_hash(spec):
            raise CacheError(f"{path}: bath spec hash mismatch")
        levels = np.frombuffer(f.read(8 * n), dtype="<f8").copy()
        n_pairs = n * (n - 1) // 2
        tri = np.frombuffer(f.read(8 * n_pairs), dtype="<f8")
    y = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    y[iu] = tri
    y[iu[1], iu[0]] = tri
    return BathRealization(levels=levels, y=y, spec=spec)
