"""Full symmetric eigendecomposition, spectral time propagation, and an
independent fixed-step integrator used as a small-instance test oracle.

The Hamiltonian is real, so eigenvectors are real and complex state vectors
act through the real eigenvector matrix as two real matmuls (this is the
whole point of keeping every Hamiltonian term real: the eigensolver runs in
real arithmetic).  Propagation is evaluated directly on arbitrary time
points from the decomposition, with no step-to-step error accumulation:

    psi(t) = V exp(-i Lambda t) V^T psi(0)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import scipy.linalg

from . import rng
from .bath import BathRealization, resolve_window
from .model import CacheError, EigensolverError, InitialCondition, SystemSpec
from .universe import UniverseHamiltonian

_QBS_MAGIC = b"QBS1"
_QBS_VERSION = 1

JOINT_BASIS = "joint_product_basis"
EIGEN_BASIS = "universe_eigenbasis"


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalues (ascending) and the orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    provenance: bytes | None = None

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass(frozen=True, eq=False)
class UniverseState:
    """Complex amplitude vector over the joint basis (or the eigenbasis)."""

    amplitudes: np.ndarray
    basis: str = JOINT_BASIS
    time: float = 0.0

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        a = self.amplitudes
        return float(np.sqrt(np.sum(a.real**2 + a.imag**2)))


def _real_dot(m: np.ndarray, z: np.ndarray) -> np.ndarray:
    """m @ z for real m and complex z without promoting m to complex.

    The real/imag parts are packed contiguously first: strided views would
    push matmul off the BLAS fast path (orders of magnitude slower).
    """
    if np.iscomplexobj(z):
        re = np.ascontiguousarray(z.real)
        im = np.ascontiguousarray(z.imag)
        return m @ re + 1j * (m @ im)
    return m @ z


def normalize_signs(v: np.ndarray) -> np.ndarray:
    """Flip eigenvector columns so the largest-magnitude entry is positive.

    Ties break at the lowest index (argmax returns the first maximum), which
    makes cached decompositions comparable across eigensolver backends.
    """
    lead = np.abs(v).argmax(axis=0)
    flip = v[lead, np.arange(v.shape[1])] < 0
    v[:, flip] *= -1.0
    return v


def diagonalize(
    h: UniverseHamiltonian | np.ndarray,
    provenance: bytes | None = None,
    overwrite: bool = False,
) -> SpectralDecomposition:
    """Full eigendecomposition of a symmetric matrix (divide-and-conquer driver).

    With overwrite=True the input matrix buffer is consumed (halves peak
    memory; the caller must not use it afterwards).
    """
    a = h.h if isinstance(h, UniverseHamiltonian) else np.asarray(h, dtype=float)
    try:
        lam, v = scipy.linalg.eigh(a, driver="evd", check_finite=False, overwrite_a=overwrite)
    except scipy.linalg.LinAlgError as exc:
        raise EigensolverError(f"symmetric eigensolver failed to converge: {exc}") from exc
    # canonical row-major layout: downstream matmul rounding must not depend on
    # whether the decomposition came from the solver or from a cache file
    v = np.ascontiguousarray(v)
    normalize_signs(v)
    return SpectralDecomposition(eigenvalues=lam, eigenvectors=v, provenance=provenance)


def prepare_initial(
    system: SystemSpec, bath: BathRealization, initial: InitialCondition
) -> UniverseState:
    """Equal-magnitude superposition of a contiguous bath window in one system block.

    Amplitudes are exp(i theta_b)/sqrt(M) on the M window states.  Phases are
    per bath eigenstate (eigenstates of the bare bath Hamiltonian, not of the
    universe), drawn from the phase_seed stream in bath-index order: uniform
    on [0, 2pi) for complex_phases, or 0/pi equiprobably for random_signs.
    """
    d, n = system.d, bath.n
    if not 0 <= initial.system_level < d:
        raise ValueError(f"system level {initial.system_level} outside [0, {d})")
    first, count = resolve_window(bath.levels, initial)
    gen = rng.stream(initial.phase_seed, rng.PHASE_STREAM)
    if initial.phase_mode == "complex_phases":
        window = np.exp(2j * np.pi * gen.random(count)) / np.sqrt(count)
    elif initial.phase_mode == "random_signs":
        window = np.where(gen.random(count) < 0.5, 1.0, -1.0).astype(complex) / np.sqrt(count)
    else:
        raise ValueError(f"unknown phase mode {initial.phase_mode!r}")
    psi = np.zeros(d * n, dtype=complex)
    start = initial.system_level * n + first
    psi[start:start + count] = window
    return UniverseState(amplitudes=psi, basis=JOINT_BASIS, time=0.0)


def eigen_coefficients(sd: SpectralDecomposition, state: UniverseState) -> np.ndarray:
    """c = V^T psi (the state expressed in the universe eigenbasis)."""
    if state.basis == EIGEN_BASIS:
        return state.amplitudes
    return _real_dot(sd.eigenvectors.T, state.amplitudes)


def to_eigenbasis(sd: SpectralDecomposition, state: UniverseState) -> UniverseState:
    return UniverseState(
        amplitudes=eigen_coefficients(sd, state), basis=EIGEN_BASIS, time=state.time
    )


def overlap_distribution(sd: SpectralDecomposition, state: UniverseState) -> np.ndarray:
    """|c_k|^2 over the universe eigenstates; sums to 1 for a normalized state."""
    c = eigen_coefficients(sd, state)
    return c.real**2 + c.imag**2


def propagate(sd: SpectralDecomposition, state: UniverseState, t: float) -> UniverseState:
    """Evolve a product-basis state for a duration t through the decomposition."""
    if state.basis != JOINT_BASIS:
        raise ValueError("propagate expects a joint_product_basis state")
    c = eigen_coefficients(sd, state)
    phased = np.exp(-1j * sd.eigenvalues * t) * c
    psi = _real_dot(sd.eigenvectors, phased)
    return UniverseState(amplitudes=psi, basis=JOINT_BASIS, time=state.time + t)


def reconstruct_grid(
    sd: SpectralDecomposition, coefficients: np.ndarray, times: np.ndarray
) -> np.ndarray:
    """Product-basis amplitudes at several times as a (dim, n_times) block.

    ``coefficients`` is the eigenbasis vector c = V^T psi(0); the block is
    V @ (exp(-i Lambda t_j) c), one column per time point.
    """
    phases = np.exp(-1j * np.outer(sd.eigenvalues, times))
    phases *= coefficients[:, None]
    return _real_dot(sd.eigenvectors, phases)


def reference_propagate(
    h: UniverseHamiltonian | np.ndarray, state: UniverseState, t: float, dt: float
) -> UniverseState:
    """Independent oracle: integrate i dpsi/dt = h psi with classical RK4 at fixed dt.

    Restricted to small instances (dim <= 512).  The step size must resolve
    the spectrum, dt * max|eigenvalue| < 0.05 (the bound is checked with a
    direct eigenvalue computation; the integration itself never touches the
    decomposition).  No renormalization is applied: norm drift is part of
    what comparisons against the spectral route measure.
    """
    a = h.h if isinstance(h, UniverseHamiltonian) else np.asarray(h, dtype=float)
    dim = a.shape[0]
    if dim > 512:
        raise ValueError(f"reference integrator is for dim <= 512, got {dim}")
    if dt <= 0:
        raise ValueError("dt must be positive")
    lam_max = float(np.max(np.abs(np.linalg.eigvalsh(a))))
    if dt * lam_max >= 0.05:
        raise ValueError(f"dt too coarse: dt*max|eigenvalue| = {dt * lam_max:.3g} >= 0.05")

    def deriv(psi):
        return -1j * _real_dot(a, psi)

    n_full = int(np.floor(t / dt + 1e-12))
    remainder = t - n_full * dt
    psi = state.amplitudes.astype(complex).copy()
    for step in range(n_full + 1):
        step_dt = dt if step < n_full else remainder
        if step_dt <= 1e-15:
            continue
        k1 = deriv(psi)
        k2 = deriv(psi + 0.5 * step_dt * k1)
        k3 = deriv(psi + 0.5 * step_dt * k2)
        k4 = deriv(psi + step_dt * k3)
        psi += (step_dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return UniverseState(amplitudes=psi, basis=state.basis, time=state.time + t)


# ---------------------------------------------------------------------------
# binary cache
# ---------------------------------------------------------------------------

def save_decomposition(path, sd: SpectralDecomposition) -> None:
    """QBS1 format: magic, version, dim, 32-byte config hash, Lambda, V column-major."""
    if sd.provenance is None or len(sd.provenance) != 32:
        raise ValueError("decomposition needs a 32-byte provenance hash to be cached")
    with open(path, "wb") as f:
        f.write(_QBS_MAGIC)
        f.write(struct.pack("<IQ", _QBS_VERSION, sd.dim))
        f.write(sd.provenance)
        f.write(sd.eigenvalues.astype("<f8").tobytes())
        # column-major: columns (eigenvectors) are contiguous on disk
        sd.eigenvectors.T.astype("<f8", copy=False).tofile(f)


def load_decomposition(path, expected_hash: bytes) -> SpectralDecomposition:
    """Load a QBS1 cache; a cache hit requires config-hash equality."""
    path = Path(path)
    if not path.exists():
        raise CacheError(f"spectral cache {path} not found")
    with open(path, "rb") as f:
        if f.read(4) != _QBS_MAGIC:
            raise CacheError(f"{path}: bad magic")
        version, dim = struct.unpack("<IQ", f.read(12))
        if version != _QBS_VERSION:
            raise CacheError(f"{path}: unsupported version {version}")
        stored = f.read(32)
        if stored != expected_hash:
            raise CacheError(f"{path}: config hash mismatch")
        lam = np.fromfile(f, dtype="<f8", count=dim)
        v_cols = np.fromfile(f, dtype="<f8", count=dim * dim).reshape(dim, dim)
    return SpectralDecomposition(eigenvalues=lam, eigenvectors=v_cols.T.copy(), provenance=stored)
