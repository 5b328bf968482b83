"""Domain types, units convention, configuration schema and validation.

Everything downstream consumes the value types defined here.  All energies
are dimensionless multiples of hbar*mu (mu = hbar = 1), all times multiples
of 1/mu, and beta is an inverse energy.  Indices are 0-based everywhere in
code; 1-based level labels appear only in docs and CSV column names.

The on-disk config format is a single UTF-8 JSON document whose nested
sections mirror the RunConfig field names exactly::

    {
      "system":   {"energies": [...], "x": [[...], ...]},
      "bath":     {"n_states": ..., "e_min": ..., "e_max": ..., "beta": ...,
                   "placement": "inverse_cdf", "eta_factor": ...,
                   "coupling_seed": ..., "level_jitter": 0.0},
      "coupling": {"g": ...},
      "initial":  {"system_level": ..., "bath_window": {"by_index": [first, count]}
                   or {"by_energy": [e_lo, e_hi]}, "phase_mode": "complex_phases",
                   "phase_seed": ...},
      "evolve":   {"t_max": ..., "n_steps": ...},
      "eth":      {"ma_window": ...},
      "output_dir": "runs/out",
      "cache": true
    }

Unknown keys anywhere in the document are reported as errors (they are
almost always typos in physics parameters).  A run-manifest JSON (which
embeds a "config" section) is also accepted by :func:`load_config`, so a
run can be reproduced directly from its manifest.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ARTIFACT_VERSION = 1

PLACEMENT_RULES = ("inverse_cdf", "recursive_spacing")
PHASE_MODES = ("complex_phases", "random_signs")

_SEED_MAX = 2**64


class ConfigError(Exception):
    """Raised for an invalid configuration; carries the complete error list."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class MemoryLimitError(Exception):
    """Raised when an allocation estimate exceeds the configured ceiling."""

    def __init__(self, required_bytes: int, ceiling_bytes: int):
        self.required_bytes = required_bytes
        self.ceiling_bytes = ceiling_bytes
        super().__init__(
            f"estimated {required_bytes} bytes required, ceiling is {ceiling_bytes} bytes"
        )


class EigensolverError(Exception):
    """Raised when the dense symmetric eigensolver fails to converge."""


class CacheError(Exception):
    """Raised for a missing or mismatched on-disk cache."""


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Small-system energy levels and its (symmetric, zero-diagonal) coupling operator."""

    energies: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "energies", np.asarray(self.energies, dtype=float))
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))

    @property
    def d(self) -> int:
        return self.energies.shape[0]

    def to_dict(self) -> dict:
        return {"energies": self.energies.tolist(), "x": self.x.tolist()}

    def __eq__(self, other):
        return (
            isinstance(other, SystemSpec)
            and np.array_equal(self.energies, other.energies)
            and np.array_equal(self.x, other.x)
        )


@dataclass(frozen=True)
class BathSpec:
    """Parameters defining a bath realization (levels plus random coupling matrix).

    ``delta_eps0`` is the derived constant mu*exp(-beta*e_min), used both as
    the unit in the coupling prefactor (eta = eta_factor * delta_eps0) and as
    the first spacing of the recursive placement rule.  It is a formula
    constant, not necessarily the realized first gap.
    """

    n_states: int
    e_min: float
    e_max: float
    beta: float
    eta_factor: float
    coupling_seed: int
    placement: str = "inverse_cdf"
    level_jitter: float = 0.0

    @property
    def delta_eps0(self) -> float:
        return float(np.exp(-self.beta * self.e_min))

    def to_dict(self) -> dict:
        return {
            "n_states": self.n_states,
            "e_min": self.e_min,
            "e_max": self.e_max,
            "beta": self.beta,
            "placement": self.placement,
            "eta_factor": self.eta_factor,
            "coupling_seed": self.coupling_seed,
            "level_jitter": self.level_jitter,
        }


@dataclass(frozen=True)
class CouplingSpec:
    """Overall system-bath coupling strength g (g = 0 is allowed)."""

    g: float

    def to_dict(self) -> dict:
        return {"g": self.g}


@dataclass(frozen=True)
class InitialCondition:
    """Product initial state: one system level times a flat window of bath eigenstates.

    The window is contiguous in bath index and can be given either directly
    (``by_index`` = (first, count)) or as an energy interval (``by_energy`` =
    (e_lo, e_hi), inclusive).  When both are present by_index wins.  Window
    amplitudes all have modulus 1/sqrt(M); their phases come from the
    phase_seed stream, either uniform in [0, 2pi) or random signs.
    """

    system_level: int
    by_index: tuple[int, int] | None = None
    by_energy: tuple[float, float] | None = None
    phase_mode: str = "complex_phases"
    phase_seed: int = 0

    def to_dict(self) -> dict:
        window: dict = {}
        if self.by_index is not None:
            window["by_index"] = list(self.by_index)
        if self.by_energy is not None:
            window["by_energy"] = list(self.by_energy)
        return {
            "system_level": self.system_level,
            "bath_window": window,
            "phase_mode": self.phase_mode,
            "phase_seed": self.phase_seed,
        }


@dataclass(frozen=True)
class EvolveSpec:
    """Uniform time grid: n_steps+1 points on [0, t_max] (n_steps = 0 means just t = 0)."""

    t_max: float
    n_steps: int

    def to_dict(self) -> dict:
        return {"t_max": self.t_max, "n_steps": self.n_steps}


@dataclass(frozen=True)
class EthSpec:
    """Eigenstate-analysis parameters; ma_window is normalized to odd."""

    ma_window: int

    def to_dict(self) -> dict:
        return {"ma_window": self.ma_window}


@dataclass(frozen=True, eq=False)
class RunConfig:
    system: SystemSpec
    bath: BathSpec
    coupling: CouplingSpec
    initial: InitialCondition
    evolve: EvolveSpec
    eth: EthSpec
    output_dir: str = "runs/out"
    cache: bool = True

    def to_dict(self) -> dict:
        return {
            "system": self.system.to_dict(),
            "bath": self.bath.to_dict(),
            "coupling": self.coupling.to_dict(),
            "initial": self.initial.to_dict(),
            "evolve": self.evolve.to_dict(),
            "eth": self.eth.to_dict(),
            "output_dir": self.output_dir,
            "cache": self.cache,
        }

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.to_dict() == other.to_dict()


# ---------------------------------------------------------------------------
# construction from plain dicts (config files)
# ---------------------------------------------------------------------------

def _check_keys(section: dict, path: str, allowed, errors: list):
    for key in section:
        if key not in allowed:
            errors.append(f"{path}{key}: unknown key")


def _get(section: dict, key: str, path: str, errors: list, default=None, required=True):
    if key in section:
        return section[key]
    if required and default is None:
        errors.append(f"{path}{key}: missing required key")
    return default


def config_from_dict(data: dict) -> RunConfig:
    """Build a RunConfig from a parsed JSON document.

    Raises ConfigError listing every structural problem (unknown keys,
    missing keys, wrong container shapes).  Value-level constraints are
    checked separately by :func:`validate`.
    """
    errors: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError(["config root must be an object"])
    _check_keys(
        data, "", ("system", "bath", "coupling", "initial", "evolve", "eth", "output_dir", "cache"), errors
    )

    def section(name) -> dict:
        sec = data.get(name)
        if sec is None:
            errors.append(f"{name}: missing section")
            return {}
        if not isinstance(sec, dict):
            errors.append(f"{name}: must be an object")
            return {}
        return sec

    sys_sec = section("system")
    _check_keys(sys_sec, "system.", ("energies", "x"), errors)
    energies = _get(sys_sec, "energies", "system.", errors, default=[])
    x = _get(sys_sec, "x", "system.", errors, default=[[]])

    bath_sec = section("bath")
    _check_keys(
        bath_sec,
        "bath.",
        ("n_states", "e_min", "e_max", "beta", "placement", "eta_factor", "coupling_seed", "level_jitter"),
        errors,
    )

    coup_sec = section("coupling")
    _check_keys(coup_sec, "coupling.", ("g",), errors)

    init_sec = section("initial")
    _check_keys(init_sec, "initial.", ("system_level", "bath_window", "phase_mode", "phase_seed"), errors)
    window = init_sec.get("bath_window", {})
    by_index = by_energy = None
    if not isinstance(window, dict):
        errors.append("initial.bath_window: must be an object")
    else:
        _check_keys(window, "initial.bath_window.", ("by_index", "by_energy"), errors)
        if "by_index" in window:
            try:
                first, count = window["by_index"]
                by_index = (int(first), int(count))
            except (TypeError, ValueError):
                errors.append("initial.bath_window.by_index: expected [first, count]")
        if "by_energy" in window:
            try:
                lo, hi = window["by_energy"]
                by_energy = (float(lo), float(hi))
            except (TypeError, ValueError):
                errors.append("initial.bath_window.by_energy: expected [e_lo, e_hi]")

    evolve_sec = section("evolve")
    _check_keys(evolve_sec, "evolve.", ("t_max", "n_steps"), errors)

    eth_sec = section("eth")
    _check_keys(eth_sec, "eth.", ("ma_window",), errors)

    if errors:
        raise ConfigError(errors)

    try:
        return RunConfig(
            system=SystemSpec(energies=energies, x=x),
            bath=BathSpec(
                n_states=int(bath_sec["n_states"]),
                e_min=float(bath_sec["e_min"]),
                e_max=float(bath_sec["e_max"]),
                beta=float(bath_sec["beta"]),
                placement=str(bath_sec.get("placement", "inverse_cdf")),
                eta_factor=float(bath_sec["eta_factor"]),
                coupling_seed=int(bath_sec["coupling_seed"]),
                level_jitter=float(bath_sec.get("level_jitter", 0.0)),
            ),
            coupling=CouplingSpec(g=float(coup_sec["g"])),
            initial=InitialCondition(
                system_level=int(init_sec["system_level"]),
                by_index=by_index,
                by_energy=by_energy,
                phase_mode=str(init_sec.get("phase_mode", "complex_phases")),
                phase_seed=int(init_sec.get("phase_seed", 0)),
            ),
            evolve=EvolveSpec(
                t_max=float(evolve_sec["t_max"]), n_steps=int(evolve_sec["n_steps"])
            ),
            eth=EthSpec(ma_window=int(eth_sec["ma_window"])),
            output_dir=str(data.get("output_dir", "runs/out")),
            cache=bool(data.get("cache", True)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError([f"malformed value: {exc}"]) from exc


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validation_errors(config: RunConfig) -> list[str]:
    """Every violated invariant, reported with its field path.  Empty list means valid."""
    errors: list[str] = []
    sys_spec, bath, coup, init = config.system, config.bath, config.coupling, config.initial

    e = sys_spec.energies
    if e.ndim != 1 or e.shape[0] < 2:
        errors.append("system.energies: need at least 2 levels")
    elif not np.all(np.diff(e) > 0):
        errors.append("system.energies: not ascending")
    x = sys_spec.x
    if x.shape != (e.shape[0], e.shape[0]):
        errors.append(f"system.x: expected shape {(e.shape[0], e.shape[0])}, got {x.shape}")
    else:
        if not np.array_equal(x, x.T):
            errors.append("system.x: not symmetric")
        if np.any(np.diag(x) != 0):
            i = int(np.flatnonzero(np.diag(x))[0])
            errors.append(f"system.x: nonzero diagonal at [{i}][{i}]")

    if bath.n_states < 2:
        errors.append("bath.n_states: must be >= 2")
    if not bath.e_min < bath.e_max:
        errors.append("bath.e_min: must be < bath.e_max")
    if not bath.beta > 0:
        errors.append("bath.beta: must be > 0")
    if not bath.eta_factor > 0:
        errors.append("bath.eta_factor: must be > 0")
    if bath.placement not in PLACEMENT_RULES:
        errors.append(f"bath.placement: must be one of {PLACEMENT_RULES}")
    if bath.level_jitter < 0:
        errors.append("bath.level_jitter: must be >= 0")
    if not 0 <= bath.coupling_seed < _SEED_MAX:
        errors.append("bath.coupling_seed: must be a 64-bit unsigned integer")

    if coup.g < 0:
        errors.append("coupling.g: must be >= 0")

    d = e.shape[0] if e.ndim == 1 else 0
    if not 0 <= init.system_level < max(d, 1):
        errors.append(f"initial.system_level: out of range [0, {d})")
    if init.by_index is None and init.by_energy is None:
        errors.append("initial.bath_window: one of by_index or by_energy required")
    if init.by_index is not None:
        first, count = init.by_index
        if first < 0 or count < 1 or first + count > bath.n_states:
            errors.append(
                f"initial.bath_window.by_index: [{first}, {count}) outside [0, {bath.n_states})"
            )
    if init.by_energy is not None:
        lo, hi = init.by_energy
        if not lo <= hi:
            errors.append("initial.bath_window.by_energy: e_lo > e_hi")
    if init.phase_mode not in PHASE_MODES:
        errors.append(f"initial.phase_mode: must be one of {PHASE_MODES}")
    if not 0 <= init.phase_seed < _SEED_MAX:
        errors.append("initial.phase_seed: must be a 64-bit unsigned integer")

    if not config.evolve.t_max > 0:
        errors.append("evolve.t_max: must be > 0")
    if config.evolve.n_steps < 0:
        errors.append("evolve.n_steps: must be >= 0")
    if config.eth.ma_window < 1:
        errors.append("eth.ma_window: must be >= 1")

    return errors


def normalize_ma_window(w: int) -> int:
    """Nearest odd integer >= w."""
    return w if w % 2 == 1 else w + 1


def validate(config: RunConfig) -> RunConfig:
    """Return the normalized config, or raise ConfigError with the complete violation list.

    Normalization makes eth.ma_window odd; window resolution to index form
    needs the realized levels and is deferred to bath.resolve_window.
    validate is idempotent.
    """
    errors = validation_errors(config)
    if errors:
        raise ConfigError(errors)
    eth = EthSpec(ma_window=normalize_ma_window(config.eth.ma_window))
    return RunConfig(
        system=config.system,
        bath=config.bath,
        coupling=config.coupling,
        initial=config.initial,
        evolve=config.evolve,
        eth=eth,
        output_dir=config.output_dir,
        cache=config.cache,
    )


# ---------------------------------------------------------------------------
# reference parameter set
# ---------------------------------------------------------------------------

def default_paper_config() -> RunConfig:
    """The published reference parameters for the 4-level system and 5000-state bath.

    Bath: 5000 states on [3, 20.0465] with beta = 0.4; coupling g = 5e-3 with
    eta = 100 * delta_eps0; initial bath window is the energy interval
    [12.4, 14.1]; moving-average window 200.  Seeds and the time grid are
    our own defaults (any fixed values reproduce).
    """
    x = np.zeros((4, 4))
    upper = {(0, 1): -0.7, (0, 2): 0.3, (0, 3): -0.9, (1, 2): -1.2, (1, 3): -0.4, (2, 3): 0.4}
    for (i, j), v in upper.items():
        x[i, j] = v
        x[j, i] = v
    return RunConfig(
        system=SystemSpec(energies=[0.5, 1.5, 2.2, 4.0], x=x),
        bath=BathSpec(
            n_states=5000,
            e_min=3.0,
            e_max=20.0465,
            beta=0.4,
            eta_factor=100.0,
            coupling_seed=101,
        ),
        coupling=CouplingSpec(g=5e-3),
        initial=InitialCondition(
            system_level=3, by_energy=(12.4, 14.1), phase_mode="complex_phases", phase_seed=202
        ),
        evolve=EvolveSpec(t_max=2000.0, n_steps=2000),
        eth=EthSpec(ma_window=200),
        output_dir="runs/paper",
        cache=True,
    )


# ---------------------------------------------------------------------------
# hashing and file I/O
# ---------------------------------------------------------------------------

def _canonical_json(data) -> bytes:
    return json.dumps(data, sort_keys=True, separators=(",", ":")).encode()


def physics_dict(config: RunConfig) -> dict:
    """The fields that determine the universe Hamiltonian (and thus the spectral cache)."""
    return {
        "system": config.system.to_dict(),
        "bath": config.bath.to_dict(),
        "coupling": config.coupling.to_dict(),
    }


def config_hash(config: RunConfig) -> bytes:
    """32-byte digest of the Hamiltonian-determining fields; keys caches."""
    return hashlib.sha256(_canonical_json(physics_dict(config))).digest()


def bath_spec_hash(spec: BathSpec) -> bytes:
    return hashlib.sha256(_canonical_json(spec.to_dict())).digest()


def load_config(path) -> RunConfig:
    """Parse and validate a config file (or a run manifest embedding one)."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: not valid JSON: {exc}"]) from exc
    if isinstance(data, dict) and "config" in data and "artifact_version" in data:
        data = data["config"]
    return validate(config_from_dict(data))


def save_config(config: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8")
