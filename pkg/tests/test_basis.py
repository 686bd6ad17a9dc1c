import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutdg.basis import (
    LegendreBasis,
    first_lobatto_weight,
    gauss_legendre,
    gauss_lobatto,
    lobatto_order_for_degree,
)


def test_gauss_legendre_midpoint():
    r = gauss_legendre(1)
    assert r.nodes[0] == pytest.approx(0.5)
    assert r.weights[0] == pytest.approx(1.0)


def test_gauss_legendre_two_points():
    r = gauss_legendre(2)
    d = 1.0 / (2.0 * np.sqrt(3.0))
    np.testing.assert_allclose(r.nodes, [0.5 - d, 0.5 + d], atol=1e-15)


def test_gauss_legendre_x4():
    r = gauss_legendre(3)
    assert np.sum(r.weights * r.nodes**4) == pytest.approx(0.2, abs=1e-15)


@pytest.mark.parametrize("n", range(1, 9))
def test_gauss_legendre_exactness(n):
    r = gauss_legendre(n)
    for m in range(2 * n):
        assert np.sum(r.weights * r.nodes**m) == pytest.approx(1.0 / (m + 1), abs=1e-14)


@pytest.mark.parametrize("q, w1", [(2, 1 / 2), (3, 1 / 6), (4, 1 / 12)])
def test_lobatto_first_weight(q, w1):
    r = gauss_lobatto(q)
    assert r.weights[0] == pytest.approx(w1, abs=1e-15)
    assert r.weights[0] == r.weights[-1]
    assert r.nodes[0] == 0.0 and r.nodes[-1] == 1.0


def test_lobatto_q3_weights():
    np.testing.assert_allclose(gauss_lobatto(3).weights, [1 / 6, 2 / 3, 1 / 6], atol=1e-15)


@pytest.mark.parametrize("q", range(2, 7))
def test_lobatto_exactness(q):
    r = gauss_lobatto(q)
    for m in range(2 * q - 2):
        assert np.sum(r.weights * r.nodes**m) == pytest.approx(1.0 / (m + 1), abs=1e-14)


@pytest.mark.parametrize("p, q", [(0, 2), (1, 2), (2, 3), (3, 3)])
def test_lobatto_order_for_degree(p, q):
    assert lobatto_order_for_degree(p) == q


def test_first_lobatto_weight_p2():
    assert first_lobatto_weight(2) == pytest.approx(1 / 6)


@pytest.mark.parametrize("p", range(4))
def test_orthonormal(p):
    b = LegendreBasis(p)
    r = gauss_legendre(p + 2)
    V = b.eval(r.nodes)
    np.testing.assert_allclose(V.T @ (r.weights[:, None] * V), np.eye(p + 1), atol=1e-14)


@pytest.mark.parametrize("p", range(1, 4))
def test_derivative_against_finite_difference(p):
    b = LegendreBasis(p)
    xi = np.linspace(0.1, 0.9, 7)
    d = 1e-6
    fd = (b.eval(xi + d) - b.eval(xi - d)) / (2 * d)
    np.testing.assert_allclose(b.eval(xi, 1), fd, atol=1e-7)


@pytest.mark.parametrize("p", range(4))
def test_monomial_round_trip(p):
    b = LegendreBasis(p)
    np.testing.assert_allclose(b.to_monomial @ b.from_monomial, np.eye(p + 1), atol=1e-13)


@settings(max_examples=50, deadline=None)
@given(p=st.integers(0, 3), d=st.floats(-5, 5, allow_nan=False))
def test_shift_matrix_preserves_values(p, d):
    b = LegendreBasis(p)
    rng = np.random.default_rng(0)
    c = rng.normal(size=p + 1)
    xi = rng.uniform(-1, 2, 6)
    T = b.shift_matrix(d)
    # polynomial attached d element widths to the right, seen from here
    np.testing.assert_allclose(b.eval(xi) @ (T @ c), b.eval(xi - d) @ c, atol=1e-10 * (1 + abs(d)) ** p)


@pytest.mark.parametrize("p", range(4))
def test_mass_on_full_element_is_identity(p):
    np.testing.assert_allclose(LegendreBasis(p).mass_on(0.0, 1.0), np.eye(p + 1), atol=1e-14)


@pytest.mark.parametrize("a, b", [(0.0, 0.3), (0.2, 0.9), (-1.0, 0.5)])
def test_integral_on(a, b):
    B = LegendreBasis(3)
    r = gauss_legendre(6)
    x, w = r.mapped(a, b)
    np.testing.assert_allclose(B.integral_on(a, b), w @ B.eval(x), atol=1e-14)


def test_rule_rejects_bad_counts():
    with pytest.raises(ValueError):
        gauss_legendre(0)
    with pytest.raises(ValueError):
        gauss_lobatto(1)
