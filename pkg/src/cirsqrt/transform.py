"""Scale function, speed density and the bidirectional CIR <-> reflected-BM map.

The scale integral S(x) = int_0^x y^(-2a/sigma^2) exp(2by/sigma^2) dy has an
integrable singularity at 0; substituting u = y^(1-c) with c = 2a/sigma^2
removes it, leaving the smooth integrand exp(beta * u^(1/(1-c))) / (1-c)
which Gauss-Legendre panels integrate at spectral accuracy.  Path
transforms evaluate S and S^-1 on full arrays through one cumulative
panel sweep plus vectorized Newton polish.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketFailure, DomainError, NegativeValue
from .params import ModelParams, SamplePath, TimeGrid, validate_params
from .quadrature import adaptive_gauss_legendre, gauss_legendre

__all__ = [
    "ScaleMap",
    "TimeChangePair",
    "scale_S",
    "scale_S_many",
    "scale_S_inv",
    "scale_S_inv_many",
    "speed_rho",
    "cir_to_rbm",
    "rbm_to_cir",
]


@dataclass(frozen=True)
class ScaleMap:
    """Scale/speed data for one parameter set; immutable and shareable."""

    params: ModelParams
    rtol: float = 1e-12

    def __post_init__(self):
        validate_params(self.params)
        if self.c >= 1.0:
            raise DomainError(f"scale integral needs 2a/sigma^2 < 1, got c = {self.c}")

    @property
    def c(self) -> float:
        p = self.params
        return 2.0 * p.a / (p.sigma * p.sigma)

    @property
    def beta(self) -> float:
        p = self.params
        return 2.0 * p.b / (p.sigma * p.sigma)


def _integrand_u(m: ScaleMap):
    """Scale integrand after the u = y^(1-c) substitution (vectorized)."""
    c, beta = m.c, m.beta
    inv = 1.0 / (1.0 - c)

    def g(u):
        return inv * np.exp(beta * np.power(u, inv))

    return g


def scale_S(m: ScaleMap, x: float) -> float:
    """S(x) by adaptive Gauss-Legendre in the substituted variable."""
    if x < 0.0:
        raise DomainError(f"scale function needs x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    u_end = x ** (1.0 - m.c)
    return adaptive_gauss_legendre(_integrand_u(m), 0.0, u_end, m.rtol)


def _segment_gl(g, lo: np.ndarray, hi: np.ndarray, n: int) -> np.ndarray:
    """n-point GL on many segments at once."""
    xg, wg = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)[:, None]
    pts = 0.5 * (lo + hi)[:, None] + half * xg[None, :]
    return np.sum(wg[None, :] * g(pts), axis=1) * half[:, 0]


def _cumulative_panels(g, nodes: np.ndarray, rtol: float) -> np.ndarray:
    """Cumulative integral of g at sorted nodes with vectorized panel refinement."""
    lo = nodes[:-1].copy()
    hi = nodes[1:].copy()
    seg = _segment_gl(g, lo, hi, 16)
    coarse = _segment_gl(g, lo, hi, 8)
    scale = np.max(np.abs(seg)) + 1e-300
    bad = np.abs(seg - coarse) > rtol * np.maximum(np.abs(seg), scale)
    rounds = 0
    while np.any(bad) and rounds < 40:
        idx = np.flatnonzero(bad)
        mid = 0.5 * (lo[idx] + hi[idx])
        left = _segment_gl(g, lo[idx], mid, 16)
        right = _segment_gl(g, mid, hi[idx], 16)
        refined = left + right
        still = np.abs(refined - seg[idx]) > rtol * np.maximum(np.abs(refined), scale)
        seg[idx] = refined
        if not np.any(still):
            break
        # fully recursive refinement for the stubborn panels (rare)
        for j in idx[still]:
            seg[j] = adaptive_gauss_legendre(g, float(lo[j]), float(hi[j]), rtol)
        break
    out = np.empty(nodes.size)
    out[0] = 0.0
    np.cumsum(seg, out=out[1:])
    return out


def scale_S_many(m: ScaleMap, xs) -> np.ndarray:
    """S at an array of points via one cumulative panel sweep."""
    xs = np.asarray(xs, dtype=np.float64)
    if np.any(xs < 0.0):
        raise DomainError("scale function needs x >= 0")
    flat = xs.ravel()
    u = np.power(flat, 1.0 - m.c)
    order = np.argsort(u)
    nodes = np.concatenate(([0.0], u[order]))
    cum = _cumulative_panels(_integrand_u(m), nodes, m.rtol)
    out = np.empty(flat.size)
    out[order] = cum[1:]
    return out.reshape(xs.shape)


def _scale_deriv(m: ScaleMap, x):
    """S'(x) = x^(-c) exp(beta x)."""
    return np.power(x, -m.c) * np.exp(m.beta * np.asarray(x, dtype=np.float64))


def scale_S_inv(m: ScaleMap, s: float) -> float:
    """Inverse of the scale function by bracketing plus safeguarded Newton.

    Stops when |S(result) - s| <= 1e-10 * (1 + s).
    """
    if s < 0.0:
        raise DomainError(f"scale values are >= 0, got {s}")
    if s == 0.0:
        return 0.0
    # exact start at b = 0, a lower bound for b < 0; for b > 0 the
    # power-law guess overflows the exponential factor, so double from 1
    if m.beta <= 0.0:
        hi = max(((1.0 - m.c) * s) ** (1.0 / (1.0 - m.c)), 1e-300)
    else:
        hi = 1.0
    fhi = scale_S(m, hi)
    grow = 0
    while fhi < s:
        hi *= 2.0
        fhi = scale_S(m, hi)
        grow += 1
        if grow > 300:
            raise BracketFailure(f"could not bracket S^-1({s})")
    lo = 0.0
    x = hi
    fx = fhi
    tol = 1e-10 * (1.0 + s)
    for _ in range(200):
        if abs(fx - s) <= tol:
            return x
        if fx > s:
            hi = x
        else:
            lo = x
        cand = x - (fx - s) / float(_scale_deriv(m, x))
        if not (lo < cand < hi):
            cand = 0.5 * (lo + hi)
        x = cand
        fx = scale_S(m, x)
    raise BracketFailure(f"Newton did not converge for S^-1({s})")


class _ScaleTable:
    """Dense monotone table of S for fast vectorized inversion."""

    def __init__(self, m: ScaleMap, x_hi: float, n: int = 4096):
        self.m = m
        x_hi = max(x_hi, 1e-12)
        grid = np.concatenate(([0.0], np.geomspace(x_hi * 1e-9, x_hi, n)))
        self.x = grid
        self.s = scale_S_many(m, grid)

    def inverse(self, s_query: np.ndarray, tol_rel: float = 1e-12) -> np.ndarray:
        m = self.m
        s_query = np.asarray(s_query, dtype=np.float64)
        out = np.zeros_like(s_query)
        pos = s_query > 0.0
        if not np.any(pos):
            return out
        sq = s_query[pos]
        if np.max(sq) > self.s[-1] * (1 + 1e-12):
            raise BracketFailure("query above the inversion table range")
        j = np.clip(np.searchsorted(self.s, sq) - 1, 0, self.x.size - 2)
        x0, x1 = self.x[j], self.x[j + 1]
        s0, s1 = self.s[j], self.s[j + 1]
        frac = np.where(s1 > s0, (sq - s0) / np.where(s1 > s0, s1 - s0, 1.0), 0.0)
        x = x0 + frac * (x1 - x0)
        # exact near-zero start: S(x) ~ x^(1-c)/(1-c)
        tiny = j == 0
        if np.any(tiny):
            x[tiny] = ((1.0 - m.c) * sq[tiny]) ** (1.0 / (1.0 - m.c))
        err = np.zeros_like(sq)
        for _ in range(60):
            fx = _incremental_S(m, self.x[j], self.s[j], x)
            err = fx - sq
            if np.all(np.abs(err) <= tol_rel * (1.0 + sq)):
                break
            x = np.maximum(x - err / _scale_deriv(m, np.maximum(x, 1e-300)), 0.5 * x0)
        else:
            if np.any(np.abs(err) > 1e-8 * (1.0 + sq)):
                raise BracketFailure("vectorized scale inversion did not converge")
        out[pos] = x
        return out


def _incremental_S(m: ScaleMap, x_base: np.ndarray, s_base: np.ndarray, x: np.ndarray) -> np.ndarray:
    """S(x) = S(x_base) + int_(x_base)^x, per element, one GL16 panel each."""
    g = _integrand_u(m)
    e = 1.0 - m.c
    u_lo = np.power(x_base, e)
    u_hi = np.power(x, e)
    xg, wg = np.polynomial.legendre.leggauss(16)
    half = 0.5 * (u_hi - u_lo)[:, None]
    pts = 0.5 * (u_lo + u_hi)[:, None] + half * xg[None, :]
    seg = np.sum(wg[None, :] * g(np.maximum(pts, 0.0)), axis=1) * half[:, 0]
    return s_base + seg


def scale_S_inv_many(m: ScaleMap, ss) -> np.ndarray:
    """Vectorized inverse via a dense table plus Newton polish."""
    ss = np.asarray(ss, dtype=np.float64)
    if np.any(ss < 0.0):
        raise DomainError("scale values are >= 0")
    flat = ss.ravel()
    smax = float(np.max(flat)) if flat.size else 0.0
    if smax == 0.0:
        return np.zeros_like(ss)
    # bracket the largest query to size the table
    x_hi = scale_S_inv(m, smax)
    table = _ScaleTable(m, x_hi * (1 + 1e-9))
    return table.inverse(flat).reshape(ss.shape)


def speed_rho(m: ScaleMap, x):
    """Speed density rho(x) = sigma^-2 x^(k-1) exp(-4bx/sigma^2), x > 0."""
    p = m.params
    xs = np.asarray(x, dtype=np.float64)
    if np.any(xs <= 0.0):
        raise DomainError("speed density is defined for x > 0 only")
    out = (1.0 / (p.sigma * p.sigma)) * np.power(xs, p.k - 1.0) * np.exp(
        -4.0 * p.b / (p.sigma * p.sigma) * xs
    )
    return float(out) if np.isscalar(x) else out


def _inv_rho_with_zero(m: ScaleMap, values: np.ndarray) -> np.ndarray:
    """1/rho(X) with the continuous extension 1/rho(0) := 0 for k < 1, sigma^2 at k = 1."""
    p = m.params
    k = p.k
    out = np.zeros_like(values)
    pos = values > 0.0
    out[pos] = (
        p.sigma * p.sigma
        * np.power(values[pos], 1.0 - k)
        * np.exp(4.0 * p.b / (p.sigma * p.sigma) * values[pos])
    )
    zero = ~pos
    if np.any(zero):
        if k < 1.0:
            out[zero] = 0.0
        elif k == 1.0:
            out[zero] = p.sigma * p.sigma
        else:
            raise DomainError("1/rho(0) diverges for k > 1; path touches zero")
    return out


def _strictify(t: np.ndarray) -> np.ndarray:
    """Make a nondecreasing sequence strictly increasing by round-off bumps."""
    out = np.maximum.accumulate(np.asarray(t, dtype=np.float64))
    flat = np.diff(out) <= 0.0
    if np.any(flat):
        bump = np.finfo(np.float64).eps * max(float(out[-1]), 1.0)
        out = out + np.concatenate(([0.0], np.cumsum(flat))) * bump
    return out


@dataclass(frozen=True)
class TimeChangePair:
    """tau aligned to the CIR grid and its inverse phi sampled at those images.

    tau[i] is the Brownian-side time matching CIR time t_i, so
    phi(tau[i]) = t_i by construction.
    """

    tau: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tau", np.asarray(self.tau, dtype=np.float64))
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=np.float64))


def cir_to_rbm(x: SamplePath, m: ScaleMap) -> tuple[SamplePath, TimeChangePair]:
    """Transform a CIR path into the driving reflected Brownian motion.

    Node times are tau_i (trapezoid of 1/rho(X)), node values S(X(t_i)).
    At k = 1, b = 0 this is exact on nodes: tau = sigma^2 t and
    W = sigma sqrt(X).
    """
    if np.any(x.values < 0.0):
        raise NegativeValue("CIR path has negative values")
    k = m.params.k
    if k > 1.0 and np.any(x.values == 0.0):
        raise DomainError("k > 1 with zero-touching path: time change undefined")
    g = _inv_rho_with_zero(m, x.values)
    dt = np.diff(x.grid.times)
    tau = np.empty(x.values.size)
    tau[0] = 0.0
    np.cumsum(0.5 * (g[1:] + g[:-1]) * dt, out=tau[1:])
    w_values = scale_S_many(m, x.values)
    tau = _strictify(tau)
    return SamplePath(TimeGrid(tau), w_values, None, x.seed), TimeChangePair(
        tau, x.grid.times.copy()
    )


def rbm_to_cir(
    w: SamplePath,
    m: ScaleMap,
    *,
    x_star: float = 1e-2,
    sub_nodes: int = 16,
) -> SamplePath:
    """Transform a reflected-BM path into the matching CIR path.

    Node times are phi_i (trapezoid of rho(S^-1(W))), node values
    S^-1(W(t_i)).  rho(S^-1(w)) blows up like w^((k-1)/(1-k/2)) at the
    barrier, so every step whose endpoints dip below w* = S(x*) is
    integrated on a geometric subdivision with the closed-form local
    power law (exact at b = 0) instead of the trapezoid.
    """
    if np.any(w.values < 0.0):
        raise DomainError("reflected path must be nonnegative")
    p = m.params
    k = p.k
    x_vals = scale_S_inv_many(m, w.values)
    rho_vals = np.zeros_like(x_vals)
    pos = x_vals > 0.0
    rho_vals[pos] = speed_rho(m, x_vals[pos])
    w_star = scale_S(m, x_star)
    p_exp = (k - 1.0) / (1.0 - 0.5 * k)

    wv = w.values
    dt = np.diff(w.grid.times)
    seg = 0.5 * (rho_vals[1:] + rho_vals[:-1]) * dt

    near = np.flatnonzero(np.minimum(wv[1:], wv[:-1]) < w_star)
    if near.size:
        lo = np.minimum(wv[near], wv[near + 1])
        hi = np.maximum(wv[near], wv[near + 1])
        seg[near] = _near_zero_segments(m, lo, hi, dt[near], p_exp, sub_nodes)

    phi = np.empty(wv.size)
    phi[0] = 0.0
    np.cumsum(seg, out=phi[1:])
    phi = _strictify(phi)
    return SamplePath(TimeGrid(phi), x_vals, None, w.seed)


def _near_zero_segments(
    m: ScaleMap,
    lo: np.ndarray,
    hi: np.ndarray,
    dt: np.ndarray,
    p_exp: float,
    sub_nodes: int,
) -> np.ndarray:
    """Time-change mass of steps crossing the barrier layer (vectorized).

    With W linear in time over a step, ds = dt/(hi-lo) dw, so the mass is
    (dt/(hi-lo)) * int_lo^hi rho(S^-1(w)) dw; each w-integral runs over a
    geometric subdivision, every cell integrated by the power law
    A w^p matched at its upper end.
    """
    n = lo.size
    out = np.zeros(n)
    stalled = hi <= 0.0
    out[stalled] = 0.0  # flat at the barrier: zero speed mass
    live = ~stalled
    if not np.any(live):
        return out
    lo_l, hi_l, dt_l = lo[live], hi[live], dt[live]
    # geometric knots from max(lo, hi*1e-12) up to hi, per segment
    start = np.maximum(lo_l, hi_l * 1e-12)
    ratios = (hi_l / start) ** (1.0 / (sub_nodes - 1))
    knots = start[:, None] * ratios[:, None] ** np.arange(sub_nodes)[None, :]
    x_knots = scale_S_inv_many(m, knots)
    rho_knots = speed_rho(m, np.maximum(x_knots, 1e-300))
    A = rho_knots / np.power(knots, p_exp)
    e = p_exp + 1.0
    ints = np.zeros_like(lo_l)
    # cell [knot_j, knot_{j+1}] with A matched at the upper knot
    upper = np.power(knots[:, 1:], e)
    lower = np.power(knots[:, :-1], e)
    ints += np.sum(A[:, 1:] * (upper - lower) / e, axis=1)
    # innermost piece [0 or lo, first knot]
    first = np.power(knots[:, 0], e)
    from_zero = lo_l <= hi_l * 1e-12
    ints += np.where(from_zero, A[:, 0] * first / e, 0.0)
    degenerate = hi_l <= lo_l
    mass = np.where(
        degenerate,
        rho_knots[:, -1] * dt_l,
        ints * dt_l / np.where(degenerate, 1.0, hi_l - lo_l),
    )
    out[live] = mass
    return out
