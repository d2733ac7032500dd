import numpy as np
import pytest

from cirsqrt import ModelParams, TimeGrid, simulate_cir, simulate_rou
from cirsqrt.convergence import converge_from_left, converge_from_right
from cirsqrt.errors import InvalidDelta, LadderNotDecreasing

LADDER = (0.5, 0.25, 0.125, 0.0625)


def test_ladder_validation():
    g = TimeGrid.uniform(1.0, 64)
    with pytest.raises(LadderNotDecreasing):
        converge_from_right(2.0, 0.0, 1.0, (0.25, 0.5), g, seed=1, replications=1)
    with pytest.raises(LadderNotDecreasing):
        converge_from_right(2.0, 0.0, 1.0, (0.5, 0.0), g, seed=1, replications=1)
    with pytest.raises(InvalidDelta):
        converge_from_left(2.0, 0.0, 1.0, (1.0, 0.5), g, seed=1, replications=1)


def test_right_study_decays():
    g = TimeGrid.uniform(1.0, 2**13)
    table = converge_from_right(2.0, 0.0, 1.0, LADDER, g, seed=5, replications=16)
    med = [lv.median_sup_err for lv in table.levels]
    assert all(m2 < m1 for m1, m2 in zip(med, med[1:]))
    assert all(lv.p90_sup_err >= 0.0 for lv in table.levels)
    assert [lv.delta for lv in table.levels] == sorted(LADDER, reverse=True)


def test_right_study_noise_free_case():
    # W = 0, b = 0: X_delta(t) = x0 + (sigma^2/4 + delta) t exactly under the
    # scheme, L0 = 0, so the sup error is the explicit integral
    # (delta/2) int_0^T dt / sqrt(x0 + (sigma^2/4 + delta) t)
    sigma, x0 = 2.0, 1.0
    n = 2**10
    g = TimeGrid.uniform(1.0, n)
    p0 = ModelParams(sigma**2 / 4, 0.0, sigma, x0)
    rou = simulate_rou(p0, g, increments=np.zeros(n))
    assert np.allclose(rou.regulator.values, 0.0)
    for d in (0.5, 0.125):
        x = simulate_cir(ModelParams(sigma**2 / 4 + d, 0.0, sigma, x0), g, increments=np.zeros(n))
        a = sigma**2 / 4 + d
        assert np.allclose(x.values, x0 + a * g.times, atol=1e-12)
        expected = d / (2 * a) * 2 * (np.sqrt(x0 + a) - np.sqrt(x0))
        integrand = 0.5 * d / np.sqrt(x.values)
        sup = np.trapezoid(integrand, dx=g.dt)
        assert sup == pytest.approx(expected, rel=1e-5)


def test_left_study_decays_and_orders():
    g = TimeGrid.uniform(1.0, 2**13)
    ty, tl = converge_from_left(2.0, 0.0, 1.0, LADDER, g, seed=5, replications=16)
    med_y = [lv.median_sup_err for lv in ty.levels]
    med_l = [lv.median_sup_err for lv in tl.levels]
    assert all(m2 < m1 for m1, m2 in zip(med_y, med_y[1:]))
    assert all(m2 < m1 for m1, m2 in zip(med_l, med_l[1:]))
    # ordering violations beyond scheme noise are rare
    assert all(lv.monotone_ok_fraction >= 0.999 for lv in ty.levels)


def test_left_noise_free_linear_decay():
    # no noise, b = 0: sup |sqrt(X_-d) - sqrt(X_0)| decays linearly in d,
    # comparing against the delta = 0 family member
    sigma, x0 = 2.0, 1.0
    n = 2**10
    g = TimeGrid.uniform(1.0, n)
    x_ref = simulate_cir(ModelParams(sigma**2 / 4, 0.0, sigma, x0), g, increments=np.zeros(n))
    sups = []
    for d in (0.4, 0.2, 0.1, 0.05):
        x = simulate_cir(
            ModelParams(sigma**2 / 4 - d, 0.0, sigma, x0), g, increments=np.zeros(n)
        )
        sups.append(np.max(np.abs(np.sqrt(x.values) - np.sqrt(x_ref.values))))
        expected = np.max(
            np.abs(np.sqrt(x0 + (sigma**2 / 4 - d) * g.times) - np.sqrt(x0 + sigma**2 / 4 * g.times))
        )
        assert sups[-1] == pytest.approx(expected, abs=1e-12)
    ratios = [s1 / s2 for s1, s2 in zip(sups, sups[1:])]
    assert all(1.7 <= r <= 2.3 for r in ratios)  # halving delta halves the distance


def test_common_noise_digest_and_worker_independence():
    g = TimeGrid.uniform(1.0, 2**10)
    t1 = converge_from_right(2.0, 0.5, 1.0, LADDER, g, seed=11, replications=6, workers=1)
    t2 = converge_from_right(2.0, 0.5, 1.0, LADDER, g, seed=11, replications=6, workers=3)
    assert t1.levels == t2.levels
    assert t1.metadata["increment_digest_rep0"] == t2.metadata["increment_digest_rep0"]
    ty1, tl1 = converge_from_left(2.0, 0.5, 1.0, LADDER, g, seed=11, replications=6, workers=1)
    ty2, tl2 = converge_from_left(2.0, 0.5, 1.0, LADDER, g, seed=11, replications=6, workers=2)
    assert ty1.levels == ty2.levels and tl1.levels == tl2.levels


def test_table_csv_schema():
    import io

    g = TimeGrid.uniform(1.0, 2**9)
    table = converge_from_right(2.0, 0.0, 1.0, (0.5, 0.25), g, seed=2, replications=3)
    buf = io.StringIO()
    table.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "n,delta,median_sup_err,p90_sup_err,monotone_ok_fraction"
    assert len(lines) == 3
