"""The compiled kernels must agree with the numpy reference implementations."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutdg import _kernels_py, kernels

compiled = pytest.importorskip("cutdg._kernels")

seeds = st.integers(0, 2**32 - 1)


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=st.integers(1, 40), P=st.integers(1, 4))
def test_poly_extrema_parity(seed, n, P):
    rng = np.random.default_rng(seed)
    mono = rng.normal(size=(n, P))
    if n > 2:
        mono[0, 1:] = 0.0  # constant row
    lo = rng.uniform(-1, 0.5, n)
    hi = lo + rng.uniform(0.01, 2, n)
    a = _kernels_py.poly_extrema(mono, lo, hi)
    b = compiled.poly_extrema(mono, lo, hi)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-14, atol=1e-14)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-14, atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=st.integers(1, 40))
def test_scalar_theta_parity(seed, n):
    rng = np.random.default_rng(seed)
    mean = rng.uniform(0, 1, n)
    vmin = mean - rng.exponential(0.5, n)
    vmax = mean + rng.exponential(0.5, n)
    vmin[: n // 4] = mean[: n // 4]  # degenerate rows
    args = (mean, vmin, vmax, 0.0, 1.0)
    np.testing.assert_allclose(_kernels_py.scalar_theta(*args), compiled.scalar_theta(*args), rtol=1e-15)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=st.integers(1, 30), k=st.integers(2, 8))
def test_positivity_thetas_parity(seed, n, k):
    rng = np.random.default_rng(seed)
    rbar = rng.uniform(1e-4, 2, n)
    mbar = rng.normal(0, 1, n)
    ebar = 0.5 * mbar**2 / rbar + rng.uniform(1e-4, 2, n)
    scale = rng.uniform(0.01, 3)
    rho = rbar[:, None] + rng.normal(0, scale, (n, k))
    mom = mbar[:, None] + rng.normal(0, scale, (n, k))
    ener = ebar[:, None] + rng.normal(0, scale, (n, k))
    eps = np.full(n, 1e-8)
    args = (rho, mom, ener, rbar, mbar, ebar, eps, eps, 1.4)
    t1a, t2a = _kernels_py.positivity_thetas(*args)
    t1b, t2b = compiled.positivity_thetas(*args)
    np.testing.assert_allclose(t1a, t1b, rtol=1e-14, atol=1e-15)
    np.testing.assert_allclose(t2a, t2b, rtol=1e-12, atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=st.integers(1, 50), thresh=st.sampled_from([0.0, 0.1, 1.0]))
def test_minmod3_parity(seed, n, thresh):
    rng = np.random.default_rng(seed)
    a, b, c = rng.normal(size=(3, n, 2))
    b[rng.uniform(size=(n, 2)) < 0.2] = np.nan
    c[rng.uniform(size=(n, 2)) < 0.2] = np.nan
    np.testing.assert_array_equal(_kernels_py.minmod3(a, b, c, thresh), compiled.minmod3(a, b, c, thresh))


def test_minmod3_scalar_shape():
    assert compiled.minmod3(np.array(0.5), 1.0, 2.0).shape == ()
