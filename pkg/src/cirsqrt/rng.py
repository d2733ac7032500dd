"""Deterministic pseudorandom plumbing.

Generator: numpy Philox (counter-based, 64-bit keyable, jump-ahead).
Substream ``i`` of seed ``s`` is ``Philox(key=s).jumped(i)``; replication
``i`` always owns substream ``i`` no matter how work is scheduled, so
results are independent of the worker count.  Gaussian draws go through
the inverse normal CDF applied to fixed-width 53-bit uniforms, which
keeps one-draw-per-variate stream alignment across schemes.

The algorithm choice is part of the artifact contract: changing it
invalidates every golden output.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

__all__ = ["substream", "standard_normals", "normal_increments"]

_TWO53 = float(1 << 53)


def substream(seed: int, index: int = 0) -> np.random.Generator:
    """Independent generator for (seed, replication index)."""
    bg = np.random.Philox(key=int(seed) & (2**64 - 1))
    if index:
        bg = bg.jumped(int(index))
    return np.random.Generator(bg)


def standard_normals(gen: np.random.Generator, n: int) -> np.ndarray:
    """N(0,1) draws via inverse CDF on (j + 1/2)/2^53 uniforms, j uniform in [0, 2^53)."""
    u = (gen.integers(0, 1 << 53, size=n).astype(np.float64) + 0.5) / _TWO53
    return ndtri(u)


def normal_increments(gen: np.random.Generator, n: int, dt: float) -> np.ndarray:
    """n i.i.d. Normal(0, dt) Brownian increments."""
    return standard_normals(gen, n) * np.sqrt(dt)
