"""Deterministic random streams.

All randomness flows through counter-based Philox generators keyed by
(seed, stream id), so every consumer owns an independent stream that is a
pure function of its 64-bit seed and never depends on draw interleaving or
thread count.  Gaussians are produced by the inverse-CDF transform of the
uniform stream (a fixed, documented transform).
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

COUPLING_STREAM = 0
JITTER_STREAM = 1
PHASE_STREAM = 2


def stream(seed: int, stream_id: int) -> np.random.Generator:
    key = np.array([seed, stream_id], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def standard_normal(gen: np.random.Generator, n: int) -> np.ndarray:
    """N(0,1) draws via ndtri(uniform); the zero-probability u=0 is clamped off -inf."""
    u = gen.random(n)
    np.maximum(u, 2.0**-53, out=u)
    return ndtri(u)


def uniform_centered(gen: np.random.Generator, n: int) -> np.ndarray:
    """Uniform draws on [-1/2, 1/2)."""
    return gen.random(n) - 0.5
