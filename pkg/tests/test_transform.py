import numpy as np
import pytest

from cirsqrt import ModelParams, SamplePath, TimeGrid, simulate_cir, sqrt_path
from cirsqrt.errors import DomainError
from cirsqrt.transform import (
    ScaleMap,
    cir_to_rbm,
    rbm_to_cir,
    scale_S,
    scale_S_inv,
    scale_S_inv_many,
    scale_S_many,
    speed_rho,
)

# independent high-precision quadrature value, computed with mpmath (dps=40)
# before the build: int_0^1 y^(-1/4) exp(y/2) dy
S1_ORACLE = 1.6706546822104878


def test_scale_closed_forms_b0():
    m = ScaleMap(ModelParams(1.0, 0.0, 2.0, 1.0))  # c = 1/2: S(x) = 2 sqrt(x)
    assert scale_S(m, 4.0) == pytest.approx(4.0, abs=1e-12)
    m2 = ScaleMap(ModelParams(0.5, 0.0, 2.0, 1.0))  # c = 1/4: S(x) = (4/3) x^(3/4)
    assert scale_S(m2, 16.0) == pytest.approx(32.0 / 3.0, rel=1e-12)


def test_scale_against_frozen_quadrature_oracle():
    m = ScaleMap(ModelParams(0.5, 1.0, 2.0, 1.0))
    assert abs(scale_S(m, 1.0) - S1_ORACLE) <= 1e-10


@pytest.mark.parametrize("k", [0.25, 0.5, 0.75])
def test_scale_closed_form_any_k_b0(k):
    m = ScaleMap(ModelParams(k, 0.0, 2.0, 1.0))  # sigma = 2: c = k/2
    xs = np.geomspace(1e-6, 50, 20)
    expected = xs ** (1 - k / 2) / (1 - k / 2)
    got = scale_S_many(m, xs)
    assert np.max(np.abs(got - expected) / expected) <= 1e-10


def test_scale_monotone():
    m = ScaleMap(ModelParams(0.5, 0.5, 2.0, 1.0))
    xs = np.sort(np.random.default_rng(3).uniform(0.0, 5.0, size=64))
    vals = scale_S_many(m, xs)
    assert np.all(np.diff(vals) > 0.0)


@pytest.mark.parametrize("k", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("b", [0.0, 1.0])
def test_scale_inverse_roundtrip(k, b):
    m = ScaleMap(ModelParams(k, b, 2.0, 1.0))
    xs = np.geomspace(1e-8, 100.0, 50)
    ss = scale_S_many(m, xs)
    back = scale_S_inv_many(m, ss)
    assert np.max(np.abs(back - xs) / (1.0 + xs)) <= 1e-8
    # scalar route agrees
    x_mid = float(xs[25])
    assert scale_S_inv(m, scale_S(m, x_mid)) == pytest.approx(x_mid, rel=1e-9)


def test_scale_inverse_at_zero():
    for b in (0.0, 1.0, -0.5):
        m = ScaleMap(ModelParams(0.5, b, 2.0, 1.0))
        assert scale_S_inv(m, 0.0) == 0.0
    m = ScaleMap(ModelParams(1.0, 0.0, 2.0, 1.0))
    assert scale_S_inv(m, 4.0) == pytest.approx(4.0, rel=1e-10)


def test_speed_density_values():
    m = ScaleMap(ModelParams(1.0, 0.0, 2.0, 1.0))
    assert speed_rho(m, 0.3) == pytest.approx(0.25)
    m2 = ScaleMap(ModelParams(0.5, 0.0, 2.0, 1.0))
    assert speed_rho(m2, 4.0) == pytest.approx(0.125)
    m3 = ScaleMap(ModelParams(0.5, 1.0, 2.0, 1.0))
    assert speed_rho(m3, 1.0) == pytest.approx(0.25 * np.exp(-1.0), rel=1e-12)
    with pytest.raises(DomainError):
        speed_rho(m3, 0.0)


def test_cir_to_rbm_exact_at_k1_b0():
    p = ModelParams(1.0, 0.0, 2.0, 1.0)
    g = TimeGrid.uniform(1.0, 2**12)
    x = simulate_cir(p, g, seed=5)
    w, pair = cir_to_rbm(x, ScaleMap(p))
    y = sqrt_path(x)
    # W(4t) = 2 Y(t) on nodes, to <= 8 ulp; tau = 4t exactly (rho constant)
    scale = np.maximum(np.abs(2.0 * y.values), 1e-300)
    assert np.max(np.abs(w.values - 2.0 * y.values) / np.spacing(scale)) <= 8.0
    assert np.array_equal(pair.tau, 4.0 * g.times)


def test_cir_to_rbm_constant_path():
    p = ModelParams(0.5, 0.0, 2.0, 1.0)
    g = TimeGrid.uniform(1.0, 64)
    x = SamplePath(g, np.ones(65))
    w, pair = cir_to_rbm(x, ScaleMap(p))
    # rho(1) = 1/4: tau = 4t; S(1) = 4/3
    assert np.allclose(pair.tau, 4.0 * g.times, atol=1e-12)
    assert np.allclose(w.values, 4.0 / 3.0, atol=1e-12)


def test_rbm_to_cir_deterministic_k1():
    # W(t) = 2 sqrt(t): S^-1(W(t)) = t, phi = t/4
    p = ModelParams(1.0, 0.0, 2.0, 1.0)
    g = TimeGrid.uniform(1.0, 256)
    w = SamplePath(g, 2.0 * np.sqrt(g.times))
    x = rbm_to_cir(w, ScaleMap(p))
    assert np.max(np.abs(x.values - w.values**2 / 4.0)) <= 1e-9
    assert np.max(np.abs(x.grid.times - g.times / 4.0)) <= 2e-4  # power-law cells near 0


def test_rbm_to_cir_constant_path():
    p = ModelParams(0.5, 0.0, 2.0, 1.0)
    g = TimeGrid.uniform(1.0, 64)
    w = SamplePath(g, np.full(65, 4.0 / 3.0))
    x = rbm_to_cir(w, ScaleMap(p))
    assert np.allclose(x.values, 1.0, atol=1e-10)
    assert np.allclose(x.grid.times, g.times / 4.0, atol=1e-10)


def test_transformed_path_quadratic_variation():
    # realized QV over transformed time ~ elapsed transformed time (5%)
    p = ModelParams(0.5, 0.5, 2.0, 1.0)
    g = TimeGrid.uniform(1.0, 2**14)
    x = simulate_cir(p, g, seed=1)
    w, pair = cir_to_rbm(x, ScaleMap(p))
    qv = float(np.sum(np.diff(w.values) ** 2))
    assert abs(qv - pair.tau[-1]) / pair.tau[-1] <= 0.05


def test_roundtrip_positive_path():
    p = ModelParams(0.5, 0.5, 2.0, 1.0)
    g = TimeGrid.uniform(1.0, 2**14)
    x = simulate_cir(p, g, seed=1)  # pinned: min X ~ 0.08, bounded away from 0
    assert x.values.min() > 0.0
    m = ScaleMap(p)
    w, pair = cir_to_rbm(x, m)
    back = rbm_to_cir(w, m)
    assert np.max(np.abs(back.values - x.values)) <= 1e-6
    # composition phi(tau) = identity within 1e-6 * horizon
    assert np.max(np.abs(back.grid.times - g.times)) <= 1e-4
    assert np.all(np.diff(pair.tau) >= 0.0)


def test_k_above_one_with_zeros_rejected():
    p = ModelParams(1.5, 0.0, 2.0, 0.0)
    g = TimeGrid.uniform(1.0, 16)
    x = SamplePath(g, np.zeros(17))
    with pytest.raises(DomainError):
        cir_to_rbm(x, ScaleMap(p))
