"""Figure description shared by both plot scripts."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class FigureSpec:
    """Input/output paths and layout knobs for one figure.

    populations_paths: one CSV per initial state (relaxation figure).
    eth_path / overlap_paths / summary_path: ETH figure inputs.
    inset_t_max: upper edge of the early-time inset; None picks 5% of the
    time horizon found in the data.
    """

    out_path: str | Path
    populations_paths: list = field(default_factory=list)
    thermal_path: str | Path | None = None
    eth_path: str | Path | None = None
    overlap_paths: list = field(default_factory=list)
    summary_path: str | Path | None = None
    inset_t_max: float | None = None
