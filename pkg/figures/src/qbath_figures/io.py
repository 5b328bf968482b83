"""Strict readers for the simulator's CSV/JSON outputs.

Every reader validates the header before touching the data and names the
offending column on mismatch, so schema drift fails loudly instead of
producing silently wrong figures.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


class FigureInputError(Exception):
    """Missing file, missing column, or malformed input table."""


def _read_table(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise FigureInputError(f"input file {path} not found")
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(header):
        raise FigureInputError(
            f"{path}: {len(header)} header columns but {data.shape[1]} data columns"
        )
    return header, data


def _require(header: list[str], names: list[str], path) -> None:
    for name in names:
        if name not in header:
            raise FigureInputError(f"{path}: missing column {name}")


def read_populations_csv(path) -> dict:
    """Populations time series: t, p1..pd, energy, norm."""
    header, data = _read_table(path)
    d = sum(1 for name in header if name.startswith("p") and name[1:].isdigit())
    if d == 0:
        raise FigureInputError(f"{path}: missing column p1")
    _require(header, ["t"] + [f"p{i + 1}" for i in range(d)] + ["energy", "norm"], path)
    cols = {name: data[:, i] for i, name in enumerate(header)}
    return {
        "t": cols["t"],
        "populations": np.column_stack([cols[f"p{i + 1}"] for i in range(d)]),
        "energy": cols["energy"],
        "norm": cols["norm"],
    }


def read_eth_csv(path) -> dict:
    """Eigenstate values: k, E_k, q1..qd, ma1..mad."""
    header, data = _read_table(path)
    d = sum(1 for name in header if name.startswith("q") and name[1:].isdigit())
    if d == 0:
        raise FigureInputError(f"{path}: missing column q1")
    _require(header, ["k", "E_k"] + [f"q{i + 1}" for i in range(d)]
             + [f"ma{i + 1}" for i in range(d)], path)
    cols = {name: data[:, i] for i, name in enumerate(header)}
    return {
        "k": cols["k"],
        "energy": cols["E_k"],
        "q": np.column_stack([cols[f"q{i + 1}"] for i in range(d)]),
        "ma": np.column_stack([cols[f"ma{i + 1}"] for i in range(d)]),
    }


def read_overlap_csv(path) -> dict:
    """Initial-state overlap distribution: k, E_k, overlap."""
    header, data = _read_table(path)
    _require(header, ["k", "E_k", "overlap"], path)
    cols = {name: data[:, i] for i, name in enumerate(header)}
    return {"k": cols["k"], "energy": cols["E_k"], "overlap": cols["overlap"]}


def read_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FigureInputError(f"input file {path} not found")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FigureInputError(f"{path}: not valid JSON: {exc}") from exc


def thermal_populations(payload: dict, path) -> np.ndarray:
    if "thermal" in payload:
        payload = payload["thermal"]
    if "populations" not in payload:
        raise FigureInputError(f"{path}: no thermal populations entry")
    return np.asarray(payload["populations"], dtype=float)
