"""Occupation densities, normalized local time, and the singular drift term.

Three routes to the singular term L(t) of Y = sqrt(X):

* ``singular_term_regularized``  -- the epsilon-regularized time integral,
* ``drift_residual``             -- the algebraic rearrangement of Y's SDE
                                    (exact up to quadrature; the ground truth),
* ``singular_term_local_time``   -- the weighted integral of the normalized
                                    local time profile.

The scheme cannot resolve occupation structure below
y_res ~ max(sqrt(a dt), sigma sqrt(dt)/2); estimators anchor their
boundary handling at that scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BinCoverage,
    DomainError,
    EmptyPath,
    ExtrapolationFailure,
    GridMismatch,
    NonUniformGrid,
)
from .params import ModelParams, SamplePath, validate_params
from .quadrature import adaptive_gauss_legendre

__all__ = [
    "OccupationDensity",
    "NormalizedLocalTime",
    "BoundaryFit",
    "SingularTermEvaluations",
    "resolution_scale",
    "default_bin_edges",
    "occupation_density",
    "normalize_ell",
    "singular_term_regularized",
    "drift_residual",
    "singular_term_local_time",
    "identity_I3",
    "excursion_decrement_check",
]

# multiplier turning the per-step motion scale into the trusted-resolution floor
RESOLUTION_MULT = 10.0


def resolution_scale(p: ModelParams, dt: float) -> float:
    """Smallest Y-level at which the Euler scheme resolves occupation."""
    return RESOLUTION_MULT * max(math.sqrt(p.a * dt), 0.5 * p.sigma * math.sqrt(dt))


def default_bin_edges(
    max_value: float,
    *,
    dt: float | None = None,
    params: ModelParams | None = None,
    n_geometric: int = 24,
    n_uniform: int = 64,
    switch_frac: float = 0.1,
    y_min: float | None = None,
) -> np.ndarray:
    """Geometric bins near 0 switching to uniform above switch_frac * max.

    The smallest positive edge defaults to half the scheme resolution
    scale when (dt, params) are known, otherwise to 1e-3 * max.
    """
    if max_value <= 0.0:
        raise BinCoverage("path maximum must be positive to build bins")
    if y_min is None:
        if dt is not None and params is not None:
            y_min = 0.5 * resolution_scale(params, dt)
        else:
            y_min = 1e-3 * max_value
    y_min = min(y_min, 0.5 * switch_frac * max_value)
    geo = np.geomspace(y_min, switch_frac * max_value, n_geometric + 1)
    uni = np.linspace(switch_frac * max_value, max_value, n_uniform + 1)[1:]
    return np.concatenate(([0.0], geo, uni))


@dataclass(frozen=True)
class OccupationDensity:
    """Binned estimate of the occupation density y -> L(t, y) at one time.

    ``mass[j]`` is the time spent in bin j up to t (trapezoid weights);
    ``density = mass / width``. ``source_dt`` and ``min_value`` describe
    the generating path and feed resolution-aware boundary handling.
    """

    t: float
    edges: np.ndarray
    density: np.ndarray
    mass: np.ndarray
    estimator: str = "histogram"
    bandwidth: float | None = None
    source_dt: float | None = None
    min_value: float | None = None
    max_value: float | None = None

    def __post_init__(self):
        for name in ("edges", "density", "mass"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def total_mass(self) -> float:
        return float(np.sum(self.mass))

    def to_csv(self, fh) -> None:
        import csv

        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y_mid", "density"])
        for y, d in zip(self.midpoints, self.density):
            w.writerow([repr(float(y)), repr(float(d))])


def _trapezoid_weights(n_nodes: int, dt: float) -> np.ndarray:
    w = np.full(n_nodes, dt)
    w[0] = w[-1] = 0.5 * dt
    return w


def occupation_mass_weighted(
    values: np.ndarray,
    node_times: np.ndarray,
    edges: np.ndarray,
) -> np.ndarray:
    """Occupation mass per bin for a path on a non-uniform grid.

    Each node carries the trapezoid weight (dt_left + dt_right)/2 of its
    node time; used by the cross-estimator check on transformed paths,
    whose grids are the non-uniform time-change images.
    """
    values = np.asarray(values, dtype=np.float64)
    node_times = np.asarray(node_times, dtype=np.float64)
    d = np.diff(node_times)
    w = np.empty(values.size)
    w[0] = 0.5 * d[0]
    w[-1] = 0.5 * d[-1]
    w[1:-1] = 0.5 * (d[1:] + d[:-1])
    mass, _ = np.histogram(values, bins=edges, weights=w)
    return mass


def _node_index(path: SamplePath, t: float) -> int:
    times = path.grid.times
    i = int(np.searchsorted(times, t - 1e-12 * max(t, 1.0)))
    if i >= times.size or abs(times[i] - t) > 1e-9 * max(t, 1.0):
        raise GridMismatch(f"evaluation time {t} is not a grid node")
    return i


def occupation_density(
    path: SamplePath,
    t: float,
    bins: np.ndarray | None = None,
    estimator: str = "histogram",
    bandwidth: float | None = None,
    params: ModelParams | None = None,
) -> OccupationDensity:
    """Occupation density of the path on [0, t].

    Histogram: mass[j] = sum of trapezoid time weights of nodes in bin j,
    so the total mass is exactly t.  Kernel: Epanechnikov smoothing of
    the histogram masses with reflection at both domain ends (mass
    preserving); a diagnostic alternative, not the reference estimator.
    """
    if path.values.size == 0:
        raise EmptyPath("empty path")
    if not path.grid.is_uniform:
        raise NonUniformGrid("estimators require the uniform default grid")
    m = _node_index(path, t)
    if m < 1:
        raise EmptyPath("need at least one step before t")
    vals = path.values[: m + 1]
    dt = path.grid.dt
    vmax = float(np.max(vals))
    if bins is None:
        bins = default_bin_edges(vmax * (1.0 + 1e-12), dt=dt, params=params)
    edges = np.ascontiguousarray(bins, dtype=np.float64)
    if edges[0] > np.min(vals) or edges[-1] < vmax:
        raise BinCoverage(
            f"bins [{edges[0]}, {edges[-1]}] do not cover path range "
            f"[{np.min(vals)}, {vmax}]"
        )
    w = _trapezoid_weights(m + 1, dt)
    mass, _ = np.histogram(vals, bins=edges, weights=w)
    widths = np.diff(edges)
    if estimator == "histogram":
        density = mass / widths
        h = None
    elif estimator == "kernel":
        h = bandwidth if bandwidth is not None else (vmax - float(np.min(vals))) * (m + 1) ** (-0.2)
        mass = _epanechnikov_smooth(edges, mass, h)
        density = mass / widths
    else:
        raise DomainError(f"unknown estimator {estimator!r}")
    return OccupationDensity(
        t=float(t),
        edges=edges,
        density=density,
        mass=mass,
        estimator=estimator,
        bandwidth=h,
        source_dt=dt,
        min_value=float(np.min(vals)),
        max_value=vmax,
    )


def _epanechnikov_smooth(edges: np.ndarray, mass: np.ndarray, h: float) -> np.ndarray:
    """Smooth bin masses with the Epanechnikov kernel, reflecting at both ends."""
    if h <= 0.0:
        return mass.copy()
    mid = 0.5 * (edges[1:] + edges[:-1])
    lo, hi = edges[0], edges[-1]
    out = np.zeros_like(mass)
    occupied = np.flatnonzero(mass > 0)
    for j in occupied:
        for src in (mid[j], 2.0 * lo - mid[j], 2.0 * hi - mid[j]):
            a = np.clip((edges[:-1] - src) / h, -1.0, 1.0)
            b = np.clip((edges[1:] - src) / h, -1.0, 1.0)
            # integral of 0.75 (1 - u^2) over [a, b]
            frac = 0.75 * (b - a) - 0.25 * (b**3 - a**3)
            out += mass[j] * frac
    return out


@dataclass(frozen=True)
class BoundaryFit:
    """Diagnostics of the boundary fit of the normalized profile.

    ell(y) ~ ell0 + A * y^(1 - k/2 + kappa) over the fit window.
    """

    anchored: bool
    window_lo: float
    window_hi: float
    n_bins: int
    amplitude: float
    kappa: float
    residual: float


@dataclass(frozen=True)
class NormalizedLocalTime:
    """Profile ell(t, y) = y^(1-k) L^Y(t, y) on bin midpoints, k = 4a/sigma^2."""

    t: float
    k: float
    edges: np.ndarray
    values: np.ndarray
    mass: np.ndarray
    ell0: float
    fit: BoundaryFit
    source_dt: float | None = None
    min_value: float | None = None
    max_value: float | None = None

    def __post_init__(self):
        for name in ("edges", "values", "mass"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def normalize_ell(
    d: OccupationDensity,
    k: float,
    *,
    params: ModelParams | None = None,
    window_decades: float = 1.0,
) -> NormalizedLocalTime:
    """Normalized local time ell = y^(1-k) * density with a boundary fit.

    The boundary value ell(t,0) is the weighted-least-squares intercept of
    ell against y^(1-k/2) (the small-y behaviour of sqrt(S(y^2))) on the
    lowest resolved occupied bins; the fitted slope and a log-log exponent
    refinement (kappa) are exposed for the sub-resolution model.  A path
    that never comes near the barrier has ell(t,0) = 0 exactly and gets no
    fit ("not anchored").
    """
    if not (0.0 < k <= 1.0):
        raise DomainError(f"normalization needs 0 < k <= 1, got k={k}")
    mid = d.midpoints
    values = np.power(mid, 1.0 - k) * d.density
    occ = np.flatnonzero(d.mass > 0)
    if occ.size == 0:
        raise EmptyPath("no occupied bins")

    if params is not None and d.source_dt is not None:
        y_res = resolution_scale(params, d.source_dt)
    else:
        y_res = float(d.edges[max(occ[0], 1)])  # lowest-decile fallback anchor
    min_val = d.min_value if d.min_value is not None else float(d.edges[occ[0]])
    anchored = min_val <= y_res

    ell0 = 0.0
    A = 0.0
    kappa = 0.0
    residual = 0.0
    win_lo = win_hi = 0.0
    n_win = 0
    if anchored:
        q = 1.0 - 0.5 * k
        sel = occ[(mid[occ] >= y_res) & (mid[occ] <= y_res * 10.0**window_decades)]
        if sel.size < 3:
            n_fit = max(3, int(math.ceil(0.1 * occ.size)))
            sel = occ[:n_fit]
        if sel.size < 2:
            raise ExtrapolationFailure("fewer than 2 occupied bins for the boundary fit")
        x = np.power(mid[sel], q)
        wgt = d.mass[sel]
        W = wgt.sum()
        sx, sy = np.sum(wgt * x), np.sum(wgt * values[sel])
        sxx, sxy = np.sum(wgt * x * x), np.sum(wgt * x * values[sel])
        det = W * sxx - sx * sx
        if det <= 0.0 or not np.isfinite(det):
            raise ExtrapolationFailure("degenerate boundary fit")
        A = (W * sxy - sx * sy) / det
        ell0 = max((sy * sxx - sx * sxy) / det, 0.0)
        pred = ell0 + A * x
        residual = float(np.sqrt(np.sum(wgt * (values[sel] - pred) ** 2) / W))
        kappa = _kappa_refinement(mid[sel], values[sel], ell0, q, k)
        win_lo, win_hi, n_win = float(mid[sel[0]]), float(mid[sel[-1]]), int(sel.size)

    fit = BoundaryFit(anchored, win_lo, win_hi, n_win, float(A), float(kappa), residual)
    return NormalizedLocalTime(
        t=d.t,
        k=float(k),
        edges=d.edges,
        values=values,
        mass=d.mass,
        ell0=float(ell0),
        fit=fit,
        source_dt=d.source_dt,
        min_value=d.min_value,
        max_value=d.max_value,
    )


def _kappa_refinement(y: np.ndarray, ell: np.ndarray, ell0: float, q: float, k: float) -> float:
    """Log-log exponent of ell - ell0 over the window; 0 when ill-posed."""
    r = ell - ell0
    if np.all(r > 0.0) and y.size >= 3:
        slope = np.polyfit(np.log(y), np.log(r), 1)[0]
        kappa = float(slope - q)
        # keep the model integrable against y^(k-2)
        return max(min(kappa, 2.0), -0.45 * k)
    return 0.0


def _cumtrapz(f: np.ndarray, dt: float) -> np.ndarray:
    out = np.empty(f.size)
    out[0] = 0.0
    np.cumsum(0.5 * (f[1:] + f[:-1]) * dt, out=out[1:])
    return out


def _value_or_series(series: np.ndarray, path: SamplePath, t: float | None):
    if t is None:
        return series
    return float(series[_node_index(path, t)])


def singular_term_regularized(
    x: SamplePath,
    p: ModelParams,
    eps: float,
    t: float | None = None,
):
    """Regularized functional L_eps by the trapezoid rule.

    Integrand (1/2)(a / sqrt(X+eps) - (sigma^2/4) X / (X+eps)^(3/2)).
    Returns the cumulative series when t is None, else the value at t.
    """
    validate_params(p)
    if eps <= 0.0:
        raise DomainError(f"eps must be > 0, got {eps}")
    X = x.values
    f = 0.5 * (p.a / np.sqrt(X + eps) - 0.25 * p.sigma**2 * X / np.power(X + eps, 1.5))
    series = _cumtrapz(f, x.grid.dt)
    return _value_or_series(series, x, t)


def drift_residual(
    y: SamplePath,
    p: ModelParams,
    t: float | None = None,
    *,
    increments: np.ndarray | None = None,
):
    """Residual R(t) = Y(t) - Y(0) + (b/2) int_0^t Y ds - (sigma/2) W(t).

    This is the singular term isolated from Y's SDE by moving every
    computable term to one side; trapezoid for the dY-integral,
    cumulative sum for W.
    """
    validate_params(p)
    inc = increments if increments is not None else y.increments
    if inc is None:
        raise GridMismatch("drift residual needs the Brownian increments")
    inc = np.asarray(inc, dtype=np.float64)
    if inc.size != y.grid.steps:
        raise GridMismatch("increments do not match the path grid")
    Y = y.values
    W = np.empty(Y.size)
    W[0] = 0.0
    np.cumsum(inc, out=W[1:])
    series = Y - Y[0] + 0.5 * p.b * _cumtrapz(Y, y.grid.dt) - 0.5 * p.sigma * W
    return _value_or_series(series, y, t)


def singular_term_local_time(
    ell: NormalizedLocalTime,
    p: ModelParams,
    *,
    method: str = "auto",
    eps: float | None = None,
    y_max: float | None = None,
) -> float:
    """Weighted-integral evaluation of the singular term from the ell profile.

    L-hat = -(1/2)(sigma^2/4 - a) * int_0^inf y^(k-2) (ell(y) - ell(0)) dy.

    method="piecewise": ell piecewise linear between bin midpoints with
    closed-form per-bin integrals; below the junction the boundary model
    A y^(1-k/2+kappa); above the last midpoint the closed-form tail
    -ell0 y^(k-2) up to y_max (default: infinity, where the tail
    converges since k < 2).

    method="mollified" (default via "auto" when the profile knows its
    source grid): evaluates the same integral with the weight pair
    mollified at scale sqrt(eps) matched to the scheme resolution,
    sum_j mass_j * f_eps(mid_j) with
    f_eps(y) = -(sigma^2/8) [(1-k)(y^2+eps)^(-1/2) - eps (y^2+eps)^(-3/2)].
    The constant-ell0 component cancels exactly under this pair (the
    integration-by-parts identity), removing the boundary-extrapolation
    sensitivity that dominates the sharp-junction assembly.
    """
    validate_params(p)
    k = ell.k
    if abs(k - p.k) > 1e-12:
        raise DomainError(f"profile built for k={ell.k}, params give k={p.k}")
    if k >= 1.0:
        return 0.0  # prefactor (sigma^2/4 - a) vanishes; regime handled elsewhere

    if method == "auto":
        method = "mollified" if ell.source_dt is not None or eps is not None else "piecewise"

    if method == "mollified":
        if eps is None:
            if ell.source_dt is None:
                raise DomainError("mollified method needs eps or a profile with source_dt")
            eps = resolution_scale(p, ell.source_dt) ** 2
        mid = ell.midpoints
        y2 = mid * mid
        f = -(p.sigma**2 / 8.0) * (
            (1.0 - k) / np.sqrt(y2 + eps) - eps / np.power(y2 + eps, 1.5)
        )
        return float(np.sum(ell.mass * f))

    if method != "piecewise":
        raise DomainError(f"unknown method {method!r}")

    mid = ell.midpoints
    vals = ell.values
    ell0 = ell.ell0
    occ = np.flatnonzero(ell.mass > 0)
    if occ.size == 0:
        raise EmptyPath("no occupied bins")
    total = 0.0
    if ell.fit.anchored:
        q = 1.0 - 0.5 * k + ell.fit.kappa
        j_lo = int(np.searchsorted(mid, ell.fit.window_lo))
        e = k - 1.0 + q
        if e <= 0.0:
            raise ExtrapolationFailure(f"boundary exponent {q} not integrable against y^(k-2)")
        total += ell.fit.amplitude * mid[j_lo] ** e / e
    else:
        j_lo = max(int(occ[0]) - 1, 0)
    for j in range(j_lo, mid.size - 1):
        y0, y1 = mid[j], mid[j + 1]
        f0, f1 = vals[j] - ell0, vals[j + 1] - ell0
        slope = (f1 - f0) / (y1 - y0)
        const = f0 - slope * y0
        total += const * (y1 ** (k - 1.0) - y0 ** (k - 1.0)) / (k - 1.0)
        total += slope * (y1**k - y0**k) / k
    # tail: ell = 0 above the last midpoint, integrand -ell0 y^(k-2)
    if y_max is None:
        total += ell0 * mid[-1] ** (k - 1.0) / (k - 1.0)
    else:
        if y_max > mid[-1]:
            total += -ell0 * (y_max ** (k - 1.0) - mid[-1] ** (k - 1.0)) / (k - 1.0)
    return -0.5 * (p.sigma**2 / 4.0 - p.a) * total


def identity_I3(k: float, eps: float) -> tuple[float, float, float]:
    """Both sides of the integration-by-parts identity, and their difference.

    lhs = int_0^inf eps (y^2+eps)^(-3/2) y^(k-1) dy
    rhs = int_0^inf (1-k) (y^2+eps)^(-1/2) y^(k-1) dy

    Substituting z = y/sqrt(eps) reduces both to eps^((k-1)/2) times
    eps-free integrals, evaluated by adaptive quadrature after removing
    the endpoint singularities.
    """
    if not (0.0 < k < 1.0) or eps <= 0.0:
        raise DomainError(f"need 0 < k < 1 and eps > 0, got k={k}, eps={eps}")
    scale = eps ** ((k - 1.0) / 2.0)

    # int_0^1 z^(k-1) g(z) dz = (1/k) int_0^1 g(u^(1/k)) du
    def lhs_low(u):
        z = np.power(u, 1.0 / k)
        return np.power(z * z + 1.0, -1.5) / k

    # int_1^inf z^(k-1)(z^2+1)^(-3/2) dz = int_0^1 w^(2-k) (1+w^2)^(-3/2) dw
    def lhs_high(w):
        return np.power(w, 2.0 - k) * np.power(1.0 + w * w, -1.5)

    def rhs_low(u):
        z = np.power(u, 1.0 / k)
        return np.power(z * z + 1.0, -0.5) / k

    # int_1^inf z^(k-1)(z^2+1)^(-1/2) dz = (1/(1-k)) int_0^1 (1+v^(2/(1-k)))^(-1/2) dv
    def rhs_high(v):
        return np.power(1.0 + np.power(v, 2.0 / (1.0 - k)), -0.5) / (1.0 - k)

    rtol = 1e-13
    lhs = scale * (
        adaptive_gauss_legendre(lhs_low, 0.0, 1.0, rtol)
        + adaptive_gauss_legendre(lhs_high, 0.0, 1.0, rtol)
    )
    rhs = scale * (1.0 - k) * (
        adaptive_gauss_legendre(rhs_low, 0.0, 1.0, rtol)
        + adaptive_gauss_legendre(rhs_high, 0.0, 1.0, rtol)
    )
    return lhs, rhs, lhs - rhs


def excursion_decrement_check(
    x: SamplePath,
    p: ModelParams,
    floor: float,
) -> list[tuple[float, float, float, float]]:
    """Per-excursion comparison of the residual decrement with its integral form.

    On every maximal grid interval with min X >= floor reports
    (t1, t2, lhs, rhs) where lhs = R(t2) - R(t1) and
    rhs = -(delta/2) * trapezoid of X^(-1/2), delta = sigma^2/4 - a.
    Returns an empty list when no excursion clears the floor.
    """
    validate_params(p)
    if floor <= 0.0:
        raise DomainError(f"floor must be > 0, got {floor}")
    if p.k >= 1.0:
        raise DomainError("excursion decrement check applies to the k < 1 regime")
    from .params import sqrt_path

    R = drift_residual(sqrt_path(x), p)
    X = x.values
    dt = x.grid.dt
    delta = p.sigma**2 / 4.0 - p.a
    ok = X >= floor
    padded = np.concatenate(([False], ok, [False]))
    flips = np.flatnonzero(np.diff(padded.astype(np.int8)))
    out = []
    for i0, i1 in flips.reshape(-1, 2):
        i1 -= 1  # last index inside the run
        if i1 - i0 < 2:
            continue
        lhs = float(R[i1] - R[i0])
        seg = X[i0 : i1 + 1]
        rhs = float(-0.5 * delta * np.trapezoid(np.power(seg, -0.5), dx=dt))
        out.append((float(x.grid.times[i0]), float(x.grid.times[i1]), lhs, rhs))
    return out


@dataclass(frozen=True)
class SingularTermEvaluations:
    """Aligned series of the three singular-term routes at selected times."""

    times: np.ndarray
    residual: np.ndarray
    regularized: dict[float, np.ndarray]
    local_time: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=np.float64))
        object.__setattr__(self, "residual", np.asarray(self.residual, dtype=np.float64))
        object.__setattr__(self, "local_time", np.asarray(self.local_time, dtype=np.float64))

    def cross_difference_regularized(self, eps: float) -> np.ndarray:
        """R(t) - L_eps(t) along the evaluation times."""
        return self.residual - self.regularized[eps]

    def cross_difference_local_time(self) -> np.ndarray:
        """R(t) - L_hat(t) along the evaluation times."""
        return self.residual - self.local_time

    def to_csv(self, fh) -> None:
        import csv

        w = csv.writer(fh, lineterminator="\n")
        eps_sorted = sorted(self.regularized, reverse=True)
        w.writerow(["t", "R"] + [f"L_eps_{e:g}" for e in eps_sorted] + ["L_hat"])
        for i, t in enumerate(self.times):
            row = [repr(float(t)), repr(float(self.residual[i]))]
            row += [repr(float(self.regularized[e][i])) for e in eps_sorted]
            row.append(repr(float(self.local_time[i])))
            w.writerow(row)
