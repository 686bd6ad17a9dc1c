import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutdg.basis import LegendreBasis
from cutdg.harness import RunConfig, run
from cutdg.mesh import MeshComplex, build_background_mesh, interfaces_at, no_interfaces
from cutdg.operator import DgState, assemble, l2_project_initial
from cutdg.reconstruction import MacroAlgebra, apply_reconstruction, extend, reconstruct_macro

from conftest import cut_complex


def test_extend_linear():
    # w(x) = 2x on element [0, h], seen from the same element: identity
    b = LegendreBasis(1)
    c = np.linalg.solve(b.eval(np.array([0.0, 1.0])), [0.0, 2.0])
    xi = np.linspace(0, 10, 5)
    np.testing.assert_allclose(b.eval(xi) @ extend(b, c, 0.0), 2 * xi, atol=1e-12)


def test_extend_constant():
    b = LegendreBasis(3)
    c = np.array([0.7, 0, 0, 0])
    np.testing.assert_allclose(extend(b, c, 1.0), c, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(p=st.integers(0, 3), d=st.integers(-3, 3), seed=st.integers(0, 1000))
def test_extend_round_trip(p, d, seed):
    rng = np.random.default_rng(seed)
    b = LegendreBasis(p)
    c = rng.normal(size=p + 1)
    xi = rng.uniform(-1, 2, 10)
    np.testing.assert_allclose(b.eval(xi) @ extend(b, c, d), b.eval(xi - d) @ c, atol=1e-12)
    np.testing.assert_allclose(extend(b, extend(b, c, d), -d), c, atol=1e-12)


def two_member(frac=0.1):
    m = build_background_mesh(0.0, 1.0, 10)
    return MeshComplex(m, interfaces_at(m, [0.3 + frac * m.h]))


def test_p0_weighted_mean():
    # members |K1| = h with value 1 and |K2| = 0.1 h with value 0 -> 1/1.1, and c0 = 0
    cx = two_member(0.1)
    op = assemble(cx, 0)
    c = np.ones((cx.n_active, 1, 1))
    m = int(np.nonzero(cx.macro_size == 2)[0][0])
    c[cx.macro_start[m] + 1] = 0.0
    alg = MacroAlgebra.macros(op)
    a = reconstruct_macro(alg, DgState(c), m)
    assert a[0, 0] == pytest.approx(1 / 1.1, abs=1e-15)


@pytest.mark.parametrize("p", range(4))
def test_reproduces_global_polynomial(p, cx):
    op = assemble(cx, p)
    q = np.array([0.5, -0.4, 0.3, 0.2])[: p + 1]
    st_ = l2_project_initial(op, lambda x: np.polynomial.polynomial.polyval(x, q))
    out = apply_reconstruction(MacroAlgebra.macros(op), st_)
    np.testing.assert_allclose(out.coeffs, st_.coeffs, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), p=st.integers(0, 3), alpha=st.floats(1e-5, 0.19))
def test_macro_integrals_preserved(seed, p, alpha):
    rng = np.random.default_rng(seed)
    cx = cut_complex(20, alpha, seed)
    op = assemble(cx, p)
    c = rng.normal(size=(cx.n_active, 1, p + 1))
    alg = MacroAlgebra.macros(op)
    before = alg.means(c) * alg.length[:, None]
    out = apply_reconstruction(alg, DgState(c))
    after = alg.means(out.coeffs) * alg.length[:, None]
    np.testing.assert_allclose(after, before, rtol=1e-13, atol=1e-13 * np.abs(before).max())


def test_members_share_one_polynomial():
    cx = two_member(0.01)
    op = assemble(cx, 2)
    rng = np.random.default_rng(0)
    c = rng.normal(size=(cx.n_active, 1, 3))
    out = apply_reconstruction(MacroAlgebra.macros(op), DgState(c))
    m = int(np.nonzero(cx.macro_size == 2)[0][0])
    e0 = cx.macro_start[m]
    x = np.linspace(cx.elem_a[e0], cx.elem_b[e0 + 1], 7)
    xi0 = (x - cx.elem_left[e0]) / cx.h
    xi1 = (x - cx.elem_left[e0 + 1]) / cx.h
    np.testing.assert_allclose(op.basis.eval(xi0) @ out.coeffs[e0, 0], op.basis.eval(xi1) @ out.coeffs[e0 + 1, 0],
                               atol=1e-12)


def test_uncut_unchanged():
    m = build_background_mesh(0, 1, 10)
    op = assemble(MeshComplex(m, no_interfaces(m)), 2)
    c = np.random.default_rng(1).normal(size=(10, 1, 3))
    out = apply_reconstruction(MacroAlgebra.macros(op), DgState(c))
    np.testing.assert_array_equal(out.coeffs, c)


def test_no_flags_bitwise_unchanged(cx):
    op = assemble(cx, 2)
    alg = MacroAlgebra.macros(op)
    c = np.random.default_rng(2).normal(size=(cx.n_active, 1, 3))
    out = apply_reconstruction(alg, DgState(c), np.zeros(alg.n, dtype=bool))
    np.testing.assert_array_equal(out.coeffs, c)


def test_on_violation_keeps_maximum_principle():
    rep = run(RunConfig("burgers_smooth", n=40, p=3, t_end=0.5, reconstruction="on_violation"), write=False)
    d = rep.diagnostics
    assert d["lo"].min() >= -1 - 1e-12
    assert d["hi"].max() <= 1 + 1e-12
