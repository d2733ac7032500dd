"""Path generation: CIR (Euler and exact transition), reflected OU, coupled families.

The default scheme is full-truncation Euler because the pathwise checks
need the (X, W) pair on one grid; the exact noncentral chi-square
transition never exposes W.  Positivity is enforced by clamping after
the full step and the clamped mass is kept as a per-path diagnostic.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels, rng
from .errors import InvalidDelta, NonFiniteState
from .params import ModelParams, ReflectionDecomposition, SamplePath, TimeGrid, validate_params

__all__ = [
    "Scheme",
    "CoupledFamily",
    "simulate_cir",
    "cir_transition_exact",
    "simulate_rou",
    "simulate_coupled_family",
]

# Poisson mixing parameters above this are refused rather than sampled
# with silently degraded accuracy.
LAMBDA_CAP = 1e8


class Scheme(enum.Enum):
    FULL_TRUNCATION_EULER = "full_truncation_euler"
    EXACT_TRANSITION = "exact_transition"


def _increments_for(grid: TimeGrid, seed: int | None, rep: int, increments) -> np.ndarray:
    if increments is not None:
        inc = np.ascontiguousarray(increments, dtype=np.float64)
        if inc.size != grid.steps:
            raise NonFiniteState(
                f"forced increments length {inc.size} != step count {grid.steps}"
            )
        return inc
    if seed is None:
        raise ValueError("either a seed or forced increments must be given")
    gen = rng.substream(seed, rep)
    return rng.normal_increments(gen, grid.steps, grid.dt)


def simulate_cir(
    p: ModelParams,
    grid: TimeGrid,
    seed: int | None = None,
    *,
    scheme: Scheme = Scheme.FULL_TRUNCATION_EULER,
    increments=None,
    rep: int = 0,
) -> SamplePath:
    """One CIR path on the grid.

    Full-truncation Euler stores the driving increments on the returned
    path; the exact transition draws from the noncentral chi-square
    transition law and carries no increments.
    """
    validate_params(p)
    if scheme is Scheme.EXACT_TRANSITION:
        if increments is not None:
            raise NonFiniteState("exact transitions cannot consume forced increments")
        gen = rng.substream(seed, rep)
        values = np.empty(grid.times.size)
        values[0] = p.x0
        x = p.x0
        for i in range(grid.steps):
            dt_i = float(grid.times[i + 1] - grid.times[i])
            x = cir_transition_exact(p, x, dt_i, gen)
            values[i + 1] = x
        return SamplePath(grid, values, None, seed)

    inc = _increments_for(grid, seed, rep, increments)
    out = np.empty(grid.times.size)
    clamp_count, clamp_mass = kernels.euler_full_truncation(
        p.x0, p.a, p.b, p.sigma, grid.dt, inc, out
    )
    return SamplePath(grid, out, inc, seed, int(clamp_count), float(clamp_mass))


def _transition_constants(p: ModelParams, x, dt: float):
    """(c, lam) of the transition law  X(t+dt) | X(t)=x  ~  c * ncx2(k, lam).

    b != 0:  c = sigma^2 (1-e^{-b dt}) / (4b),   lam = 4b e^{-b dt} x / (sigma^2 (1-e^{-b dt}))
    b == 0:  c = sigma^2 dt / 4,                 lam = 4x / (sigma^2 dt)
    The b<0 branch uses the same expressions: -expm1(-b dt) and b share
    their sign, so c > 0 and lam >= 0 throughout.
    """
    if p.b != 0.0:
        g = -math.expm1(-p.b * dt)  # 1 - e^{-b dt}, sign of b
        c = p.sigma * p.sigma * g / (4.0 * p.b)
        lam = 4.0 * p.b * math.exp(-p.b * dt) * np.asarray(x) / (p.sigma * p.sigma * g)
    else:
        c = p.sigma * p.sigma * dt / 4.0
        lam = 4.0 * np.asarray(x) / (p.sigma * p.sigma * dt)
    return c, lam


def cir_transition_exact(
    p: ModelParams,
    x,
    dt: float,
    gen: np.random.Generator,
    size: int | None = None,
):
    """Draw X(t+dt) | X(t)=x from the exact transition law.

    Sampling uses the Poisson mixture of central chi-squares,
    ncx2(k, lam) = chi2(k + 2 J) with J ~ Poisson(lam/2), which is valid
    for every k > 0 including k < 1.  Poisson and gamma variates come
    from numpy's Generator (inversion below lam=10, PTRS acceptance
    above; Marsaglia-Tsang for gamma).
    """
    if np.any(np.asarray(x) < 0.0) or dt <= 0.0:
        raise NonFiniteState(f"need x >= 0 and dt > 0, got x={x}, dt={dt}")
    c, lam = _transition_constants(p, x, dt)
    if not np.all(np.isfinite(lam)) or not math.isfinite(c):
        raise NonFiniteState("transition constants overflowed")
    if np.any(lam > LAMBDA_CAP):
        raise NonFiniteState(f"noncentrality {np.max(lam):.3e} above cap {LAMBDA_CAP:.0e}")
    n = size if size is not None else np.asarray(x).size
    j = gen.poisson(lam / 2.0, size=n)
    draw = 2.0 * gen.standard_gamma((p.k + 2.0 * j) / 2.0, size=n)
    out = c * draw
    if size is None and np.isscalar(x):
        return float(out[0])
    return out


def simulate_rou(
    p: ModelParams,
    grid: TimeGrid,
    seed: int | None = None,
    *,
    increments=None,
    rep: int = 0,
) -> ReflectionDecomposition:
    """Reflected OU pair (Y0, L0) by the projected-Euler Skorokhod recursion.

    Only b, sigma, x0 enter; a is ignored by the reflected dynamics.
    The regulator grows only at the barrier: dL_i > 0 implies Y_{i+1} = 0
    exactly, by construction.
    """
    validate_params(p)
    inc = _increments_for(grid, seed, rep, increments)
    y = np.empty(grid.times.size)
    ell = np.empty(grid.times.size)
    kernels.skorokhod_rou(math.sqrt(p.x0), p.b, p.sigma, grid.dt, inc, y, ell)
    return ReflectionDecomposition(
        SamplePath(grid, y, inc, seed),
        SamplePath(grid, ell, None, seed),
    )


@dataclass(frozen=True)
class CoupledFamily:
    """CIR family a(delta) = sigma^2/4 + delta driven by one increment stream."""

    sigma: float
    b: float
    x0: float
    deltas: tuple[float, ...]
    grid: TimeGrid
    seed: int | None
    increments: np.ndarray
    paths: tuple[SamplePath, ...]

    def member(self, delta: float) -> SamplePath:
        return self.paths[self.deltas.index(delta)]


def simulate_coupled_family(
    sigma: float,
    b: float,
    x0: float,
    deltas,
    grid: TimeGrid,
    seed: int | None = None,
    *,
    increments=None,
    rep: int = 0,
) -> CoupledFamily:
    """Simulate every X_delta with bit-identical shared increments."""
    deltas = tuple(float(d) for d in deltas)
    if any(deltas[i] >= deltas[i + 1] for i in range(len(deltas) - 1)):
        raise InvalidDelta("deltas must be strictly increasing")
    base = sigma * sigma / 4.0
    for d in deltas:
        if base + d <= 0.0:
            raise InvalidDelta(f"delta {d} gives a = {base + d} <= 0")
    inc = _increments_for(grid, seed, rep, increments)
    paths = tuple(
        simulate_cir(
            ModelParams(base + d, b, sigma, x0), grid, seed, increments=inc
        )
        for d in deltas
    )
    return CoupledFamily(sigma, b, x0, deltas, grid, seed, inc, paths)
