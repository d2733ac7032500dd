"""Backend equivalence: the Cython kernels and the pure-Python twins
must produce bit-identical output."""
import numpy as np
import pytest

from cirsqrt import kernels
from cirsqrt.kernels import _ref


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled backend not built")
def test_euler_backends_bit_identical():
    rng = np.random.default_rng(123)
    for _ in range(5):
        dw = rng.normal(0.0, 0.05, size=4096)
        fast = np.empty(dw.size + 1)
        slow = np.empty(dw.size + 1)
        cf, mf = kernels.euler_full_truncation(1.0, 0.5, 0.5, 2.0, 1.0 / 4096, dw, fast)
        cs, ms = _ref.euler_full_truncation(1.0, 0.5, 0.5, 2.0, 1.0 / 4096, dw, slow)
        assert np.array_equal(fast, slow)
        assert (cf, mf) == (cs, ms)


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled backend not built")
def test_rou_backends_bit_identical():
    rng = np.random.default_rng(321)
    dw = rng.normal(0.0, 0.05, size=4096)
    yf, lf = np.empty(dw.size + 1), np.empty(dw.size + 1)
    ys, ls = np.empty(dw.size + 1), np.empty(dw.size + 1)
    kernels.skorokhod_rou(1.0, 0.5, 2.0, 1.0 / 4096, dw, yf, lf)
    _ref.skorokhod_rou(1.0, 0.5, 2.0, 1.0 / 4096, dw, ys, ls)
    assert np.array_equal(yf, ys)
    assert np.array_equal(lf, ls)


def test_clamp_diagnostics_count_real_clamps():
    # strong downward pushes force clamping; the mass is what was cut off
    dw = np.full(4, -1.0)
    out = np.empty(5)
    count, mass = kernels.euler_full_truncation(0.5, 0.1, 0.0, 1.0, 0.1, dw, out)
    assert count >= 1
    assert mass > 0.0
    assert np.all(out >= 0.0)


def test_regulator_grows_only_at_barrier():
    rng = np.random.default_rng(11)
    dw = rng.normal(0.0, 0.02, size=2048)
    y, ell = np.empty(2049), np.empty(2049)
    kernels.skorokhod_rou(0.05, 0.5, 2.0, 1.0 / 2048, dw, y, ell)
    dl = np.diff(ell)
    grew = dl > 0.0
    assert np.any(grew)
    assert np.all(y[1:][grew] == 0.0)
    assert np.all(dl >= 0.0)
