"""Noncentral chi-square CDF and the Kolmogorov-Smirnov sampler check.

The CDF is the Poisson mixture of regularized lower incomplete gamma
functions, F(x; k, lam) = sum_j pois(j; lam/2) P(k/2 + j, x/2).
P(a, x) is evaluated by its power series for x < a + 1 and by the
Lentz continued fraction of Q(a, x) otherwise; both vectorized.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import CdfAccuracy
from .params import ModelParams, validate_params

__all__ = [
    "gammainc_lower_reg",
    "ncx2_cdf",
    "ks_statistic",
    "ks_test_exact_transition",
]

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 600
# 1% two-sided Kolmogorov critical constant
KS_CRITICAL_1PCT = 1.63


def _gser(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Series P(a,x) = x^a e^-x / Gamma(a) * sum x^n / (a)_{n+1}; for x < a+1."""
    out = np.zeros_like(x)
    active = x > 0.0
    ap = a.copy()
    term = np.where(active, 1.0 / np.maximum(a, _TINY), 0.0)
    total = term.copy()
    for _ in range(_MAX_ITER):
        ap = ap + 1.0
        term = term * x / ap
        total = np.where(active, total + term, total)
        active = active & (np.abs(term) > np.abs(total) * _EPS)
        if not np.any(active):
            break
    else:
        raise CdfAccuracy("incomplete-gamma series did not converge")
    log_pref = a * np.log(np.maximum(x, _TINY)) - x - _lgamma(a)
    out = total * np.exp(log_pref)
    return np.where(x > 0.0, out, 0.0)


def _gcf(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Continued fraction for Q(a,x) by modified Lentz; for x >= a+1."""
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / np.maximum(b, _TINY)
    h = d.copy()
    converged = np.zeros(x.shape, dtype=bool)
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(converged, h, h * delta)
        converged = converged | (np.abs(delta - 1.0) < _EPS)
        if np.all(converged):
            break
    else:
        raise CdfAccuracy("incomplete-gamma continued fraction did not converge")
    log_pref = a * np.log(np.maximum(x, _TINY)) - x - _lgamma(a)
    return np.exp(log_pref) * h


def _lgamma(a: np.ndarray) -> np.ndarray:
    from scipy.special import gammaln

    return gammaln(a)


def gammainc_lower_reg(a, x) -> np.ndarray:
    """Regularized lower incomplete gamma P(a, x), vectorized, abs err ~1e-14."""
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    a, x = np.broadcast_arrays(a, x)
    a = a.astype(np.float64).copy()
    x = x.astype(np.float64).copy()
    if np.any(a <= 0.0) or np.any(x < 0.0):
        raise CdfAccuracy("gammainc needs a > 0, x >= 0")
    out = np.empty_like(x)
    series = x < a + 1.0
    if np.any(series):
        out[series] = _gser(a[series], x[series])
    other = ~series
    if np.any(other):
        out[other] = 1.0 - _gcf(a[other], x[other])
    return np.clip(out, 0.0, 1.0)


def ncx2_cdf(x, k: float, lam: float, *, tail_tol: float = 1e-12) -> np.ndarray:
    """CDF of the noncentral chi-square with k > 0 dof and noncentrality lam >= 0.

    Truncates the Poisson mixture symmetrically around its mode once the
    remaining Poisson tail mass is below tail_tol; raises CdfAccuracy
    when the term budget cannot deliver that.
    """
    x = np.asarray(x, dtype=np.float64)
    if k <= 0.0 or lam < 0.0:
        raise CdfAccuracy(f"need k > 0, lam >= 0; got k={k}, lam={lam}")
    half = lam / 2.0
    if half == 0.0:
        return gammainc_lower_reg(k / 2.0, x / 2.0)
    j0 = int(half)
    # log Poisson weight at the mode, then recur outward
    logw0 = -half + j0 * math.log(half) - math.lgamma(j0 + 1)
    acc = np.zeros_like(x)
    budget = 200000
    w = math.exp(logw0)
    used = w
    acc += w * gammainc_lower_reg(k / 2.0 + j0, x / 2.0)
    wl, wr = w, w
    jl, jr = j0, j0
    for _ in range(budget):
        if 1.0 - used <= tail_tol:
            return np.clip(acc, 0.0, 1.0)
        stepped = False
        if jl > 0:
            wl = wl * jl / half
            jl -= 1
            acc += wl * gammainc_lower_reg(k / 2.0 + jl, x / 2.0)
            used += wl
            stepped = True
        wr = wr * half / (jr + 1)
        jr += 1
        acc += wr * gammainc_lower_reg(k / 2.0 + jr, x / 2.0)
        used += wr
        if not stepped and wr < tail_tol * 1e-3 and 1.0 - used <= tail_tol:
            return np.clip(acc, 0.0, 1.0)
    raise CdfAccuracy(f"Poisson mixture truncation failed for lam={lam}")


def ks_statistic(samples: np.ndarray, cdf_values: np.ndarray) -> float:
    """Two-sided KS distance between the ECDF of samples and cdf evaluated at them."""
    n = samples.size
    order = np.argsort(samples)
    f = cdf_values[order]
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    return float(max(d_plus, d_minus))


def ks_test_exact_transition(
    p: ModelParams,
    x: float,
    dt: float,
    n_samples: int,
    seed: int,
) -> tuple[float, bool]:
    """KS test of the exact-transition sampler against the analytic law.

    Pass criterion: statistic <= 1.5 * (1% critical value 1.63/sqrt(n)).
    """
    from . import rng
    from .engine import _transition_constants, cir_transition_exact

    validate_params(p)
    if n_samples < 1000:
        raise CdfAccuracy("need at least 10^3 samples for a meaningful KS test")
    gen = rng.substream(seed, 0)
    draws = cir_transition_exact(p, np.full(n_samples, float(x)), dt, gen, size=n_samples)
    c, lam = _transition_constants(p, float(x), dt)
    cdf_vals = ncx2_cdf(np.asarray(draws) / c, p.k, float(lam))
    stat = ks_statistic(np.asarray(draws), cdf_vals)
    threshold = 1.5 * KS_CRITICAL_1PCT / math.sqrt(n_samples)
    return stat, stat <= threshold
