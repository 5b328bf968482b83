"""Command-line pipeline: build / evolve / eth / thermal.

Exit codes are fixed so sweeps can script against them: 0 ok, 2 config
validation failure, 3 memory refusal, 4 eigensolver failure, 5 missing or
mismatched cache.  Every command honors --dry-run (print estimates, write
nothing) and emits a manifest JSON which echoes the fully normalized config;
a manifest can itself be passed back as --config to reproduce the run.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import bath as bath_mod
from . import eth as eth_mod
from . import observables as obs
from . import spectral
from . import universe
from .model import (
    ARTIFACT_VERSION,
    CacheError,
    ConfigError,
    EigensolverError,
    MemoryLimitError,
    RunConfig,
    config_hash,
    load_config,
    validate,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_MEMORY = 3
EXIT_EIGENSOLVER = 4
EXIT_CACHE = 5

SPECTRAL_CACHE = "spectral.qbs"
BATH_CACHE = "bath.qbr"

_SEED_NAMES = ("coupling_seed", "phase_seed")


def _parse_bytes(text: str) -> int:
    text = text.strip().lower()
    factor = 1
    for suffix, mult in (("k", 1024), ("m", 1024**2), ("g", 1024**3)):
        if text.endswith(suffix):
            factor = mult
            text = text[:-1]
            break
    return int(float(text) * factor)


def _apply_overrides(config: RunConfig, overrides: list[str]) -> RunConfig:
    for item in overrides:
        name, _, value = item.partition("=")
        if name not in _SEED_NAMES or not value:
            raise ConfigError(
                [f"--seed-override {item!r}: expected NAME=VALUE with NAME in {_SEED_NAMES}"]
            )
        seed = int(value)
        if name == "coupling_seed":
            config = dataclasses.replace(
                config, bath=dataclasses.replace(config.bath, coupling_seed=seed)
            )
        else:
            config = dataclasses.replace(
                config, initial=dataclasses.replace(config.initial, phase_seed=seed)
            )
    return validate(config)


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


class _Pipeline:
    """Shared stage runner: lazily realizes the bath / decomposition, records timings."""

    def __init__(self, config: RunConfig, out_dir: Path, args):
        self.config = config
        self.out_dir = out_dir
        self.args = args
        self.hash = config_hash(config)
        self.timings: dict[str, float] = {}
        self.resolved: dict = {}
        self._bath = None
        self._sd = None

    def _timed(self, name, fn):
        t0 = time.perf_counter()
        result = fn()
        self.timings[name] = round(time.perf_counter() - t0, 6)
        return result

    @property
    def dim(self) -> int:
        return self.config.system.d * self.config.bath.n_states

    @property
    def bath(self) -> bath_mod.BathRealization:
        if self._bath is None:
            self._bath = self._timed("bath", lambda: bath_mod.realize(self.config.bath))
            self.resolved["e_max_realized"] = float(self._bath.levels[-1])
        return self._bath

    def build_decomposition(self) -> spectral.SpectralDecomposition:
        """Assemble and diagonalize (no cache read)."""
        ceiling = self.args.memory_ceiling
        uni = self._timed(
            "assemble",
            lambda: universe.assemble(
                self.config.system, self.bath, self.config.coupling.g, memory_ceiling=ceiling
            ),
        )
        self._sd = self._timed(
            "diagonalize", lambda: spectral.diagonalize(uni, provenance=self.hash, overwrite=True)
        )
        return self._sd

    @property
    def sd(self) -> spectral.SpectralDecomposition:
        """Decomposition from cache when config.cache is set, else built inline."""
        if self._sd is None:
            if self.config.cache:
                self._sd = self._timed(
                    "load_cache",
                    lambda: spectral.load_decomposition(self.out_dir / SPECTRAL_CACHE, self.hash),
                )
            else:
                self.build_decomposition()
        return self._sd

    def initial_state(self) -> spectral.UniverseState:
        first, count = bath_mod.resolve_window(self.bath.levels, self.config.initial)
        self.resolved["bath_window_first"] = first
        self.resolved["bath_window_count"] = count
        self.resolved["bath_window_energies"] = [
            float(self.bath.levels[first]),
            float(self.bath.levels[first + count - 1]),
        ]
        return spectral.prepare_initial(self.config.system, self.bath, self.config.initial)

    def time_grid(self) -> np.ndarray:
        ev = self.config.evolve
        if ev.n_steps == 0:
            return np.zeros(1)
        return ev.t_max * np.arange(ev.n_steps + 1) / ev.n_steps

    def write_manifest(self, command: str, outputs: list[Path]) -> Path:
        manifest = {
            "artifact_version": ARTIFACT_VERSION,
            "command": command,
            "config": self.config.to_dict(),
            "config_hash": self.hash.hex(),
            "seeds": {
                "coupling_seed": self.config.bath.coupling_seed,
                "phase_seed": self.config.initial.phase_seed,
            },
            "dim": self.dim,
            "memory_estimate_bytes": universe.memory_estimate_bytes(self.dim),
            "resolved": self.resolved,
            "timings_s": self.timings,
            "outputs": {
                p.name: {"sha256": _sha256_file(p), "bytes": p.stat().st_size} for p in outputs
            },
        }
        path = self.out_dir / f"{command}_manifest.json"
        path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        return path


def _dry_run_report(pipe: _Pipeline, command: str) -> None:
    dim = pipe.dim
    est = universe.memory_estimate_bytes(dim)
    # rough cubic scaling around a measured 4000-dim decomposition (~10 s on 2 cores)
    eig_seconds = 10.0 * (dim / 4000.0) ** 3
    print(f"dry-run {command}: dim = {dim}")
    print(f"dry-run {command}: memory estimate = {est} bytes ({est / 2**30:.2f} GiB)")
    print(f"dry-run {command}: eigensolver time scale ~ {eig_seconds:.1f} s")
    print(f"dry-run {command}: nothing written")


def cmd_build(pipe: _Pipeline) -> int:
    if pipe.args.dry_run:
        _dry_run_report(pipe, "build")
        return EXIT_OK
    ceiling = pipe.args.memory_ceiling
    dim = pipe.dim
    est = universe.memory_estimate_bytes(dim)
    if ceiling is not None and est > ceiling:
        # fail before realizing anything
        print(f"memory refusal: required {est} bytes > ceiling {ceiling} bytes", file=sys.stderr)
        return EXIT_MEMORY
    sd = pipe.build_decomposition()
    outputs = []
    bath_path = pipe.out_dir / BATH_CACHE
    bath_mod.save_realization(bath_path, pipe.bath)
    outputs.append(bath_path)
    cache_path = pipe.out_dir / SPECTRAL_CACHE
    pipe._timed("write_cache", lambda: spectral.save_decomposition(cache_path, sd))
    outputs.append(cache_path)
    manifest = pipe.write_manifest("build", outputs)
    print(f"build: {dim} eigenpairs cached at {cache_path}")
    print(f"build: manifest {manifest}")
    return EXIT_OK


def cmd_evolve(pipe: _Pipeline) -> int:
    if pipe.args.dry_run:
        _dry_run_report(pipe, "evolve")
        return EXIT_OK
    sd = pipe.sd
    psi0 = pipe.initial_state()
    times = pipe.time_grid()
    series = pipe._timed(
        "evolve",
        lambda: obs.population_series(
            sd, psi0, times, pipe.config.system, pipe.bath, pipe.config.coupling.g,
            threads=pipe.args.threads,
        ),
    )
    csv_path = pipe.out_dir / "populations.csv"
    obs.write_populations_csv(csv_path, series)
    manifest = pipe.write_manifest("evolve", [csv_path])
    print(f"evolve: {times.shape[0]} samples -> {csv_path}")
    print(f"evolve: manifest {manifest}")
    return EXIT_OK


def cmd_eth(pipe: _Pipeline) -> int:
    if pipe.args.dry_run:
        _dry_run_report(pipe, "eth")
        return EXIT_OK
    config = pipe.config
    sd = pipe.sd
    psi0 = pipe.initial_state()
    profile = pipe._timed(
        "eth_profile", lambda: eth_mod.build_profile(sd, config.system.d, config.eth.ma_window)
    )
    overlaps = spectral.overlap_distribution(sd, psi0)
    thermal = obs.boltzmann(config.system, config.bath.beta)
    k_range = eth_mod.central_range(profile.dim)
    max_dev, rms = eth_mod.eth_deviation(profile, thermal, k_range)
    window_energies = pipe.resolved["bath_window_energies"]
    try:
        counting = eth_mod.g0_counting_check(
            config.system, pipe.bath.levels, tuple(window_energies)
        )
        g0_section = {"energy_window": list(window_energies), "fractions": counting.tolist()}
    except ValueError as exc:
        g0_section = {"energy_window": list(window_energies), "error": str(exc)}
    diag_ens = obs.diagonal_ensemble(overlaps, profile.eigenstate_values)

    eth_csv = pipe.out_dir / "eth.csv"
    eth_mod.write_eth_csv(eth_csv, profile)
    overlap_csv = pipe.out_dir / "overlap.csv"
    eth_mod.write_overlap_csv(overlap_csv, profile.eigen_energies, overlaps)
    summary = {
        "thermal": {"beta": thermal.beta, "z": thermal.z, "populations": thermal.populations.tolist()},
        "eth_deviation": {
            "k_range": list(k_range),
            "max_abs_dev_of_ma": max_dev.tolist(),
            "rms_fluctuation": rms.tolist(),
        },
        "g0_counting": g0_section,
        "diagonal_ensemble": {"populations": diag_ens.tolist()},
        "ma_window": profile.window,
    }
    summary_path = pipe.out_dir / "eth_summary.json"
    summary_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    manifest = pipe.write_manifest("eth", [eth_csv, overlap_csv, summary_path])
    print(f"eth: profile for {profile.dim} eigenstates -> {eth_csv}")
    print(f"eth: manifest {manifest}")
    return EXIT_OK


def cmd_thermal(pipe: _Pipeline) -> int:
    if pipe.args.dry_run:
        print("dry-run thermal: nothing written")
        return EXIT_OK
    thermal = obs.boltzmann(pipe.config.system, pipe.config.bath.beta)
    payload = {
        "beta": thermal.beta,
        "z": thermal.z,
        "populations": thermal.populations.tolist(),
    }
    path = pipe.out_dir / "thermal.json"
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    pipe.write_manifest("thermal", [path])
    print(f"thermal: {path}")
    return EXIT_OK


_COMMANDS = {"build": cmd_build, "evolve": cmd_evolve, "eth": cmd_eth, "thermal": cmd_thermal}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qbath",
        description="Exact finite-bath thermalization simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("build", "realize bath, assemble and diagonalize, write caches"),
        ("evolve", "populations time series CSV"),
        ("eth", "eigenstate-value / overlap CSVs and summary JSON"),
        ("thermal", "Boltzmann reference JSON"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="config (or manifest) JSON path")
        p.add_argument("--output-dir", default=None, help="override config output_dir")
        p.add_argument(
            "--seed-override", action="append", default=[], metavar="NAME=VALUE",
            help="override coupling_seed or phase_seed (repeatable)",
        )
        p.add_argument("--dry-run", action="store_true", help="print estimates, write nothing")
        p.add_argument("--threads", type=int, default=0, help="worker threads (0 = auto)")
        p.add_argument(
            "--memory-ceiling", type=_parse_bytes, default=None, metavar="BYTES",
            help="refuse to allocate beyond this (suffixes k/m/g)",
        )
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        config = _apply_overrides(config, args.seed_override)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    out_dir = Path(args.output_dir) if args.output_dir else Path(config.output_dir)
    if not args.dry_run:
        out_dir.mkdir(parents=True, exist_ok=True)
    pipe = _Pipeline(config, out_dir, args)

    try:
        return _COMMANDS[args.command](pipe)
    except MemoryLimitError as exc:
        print(
            f"memory refusal: required {exc.required_bytes} bytes "
            f"> ceiling {exc.ceiling_bytes} bytes",
            file=sys.stderr,
        )
        return EXIT_MEMORY
    except EigensolverError as exc:
        print(f"eigensolver failure: {exc}", file=sys.stderr)
        return EXIT_EIGENSOLVER
    except CacheError as exc:
        print(f"cache error: {exc}", file=sys.stderr)
        return EXIT_CACHE


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
