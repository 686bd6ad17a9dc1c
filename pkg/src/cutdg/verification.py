"""Property suites run by `cutdg verify`.

Each suite returns CheckResult records; a failing record carries a small
counterexample so it can be replayed.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as npoly

from .basis import LegendreBasis, gauss_legendre, gauss_lobatto
from .errors import BoundViolation, MeanOutOfBounds
from .limiters import (
    AdmissibleSetParams,
    LimiterConfig,
    PostProcessor,
    ScalarBounds,
    positivity_limit_coeffs,
    pressure_from,
    scalar_limit_coeffs,
)
from .mesh import InterfaceSet, MeshComplex, build_background_mesh, generate_interfaces
from .operator import DgState, assemble, forward_euler_update, global_lambda, lax_friedrichs_flux
from .problems import BurgersFlux, get_problem
from .reconstruction import MacroAlgebra, apply_reconstruction
from .timestepping import compute_dt


@dataclass
class CheckResult:
    suite: str
    name: str
    passed: bool
    value: float
    tolerance: float
    cases: int = 0
    counterexample: dict | None = field(default=None)

    def as_dict(self):
        d = dataclasses.asdict(self)
        d["passed"] = bool(d["passed"])
        d["value"] = float(d["value"])
        return d

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.suite}/{self.name}: value={self.value:.3e} tol={self.tolerance:.1e} cases={self.cases}"


def random_complex(rng: np.random.Generator, n=None, alpha=None, delta=0.2, domain=(0.0, 2.0)) -> MeshComplex:
    n = int(rng.integers(6, 24)) if n is None else n
    alpha = float(rng.uniform(1e-3, 0.5)) if alpha is None else alpha
    mesh = build_background_mesh(*domain, n)
    lo, hi = sorted(rng.uniform(*domain, size=2))
    hi = max(hi, lo + 2 * mesh.h)
    ifaces = generate_interfaces(mesh, (lo, min(hi, domain[1])), alpha, int(rng.integers(2**31)))
    return MeshComplex(mesh, ifaces, delta)


# -- suites ------------------------------------------------------------------------------
def suite_conservation(rng, quick=False):
    """Macro-element integrals are unchanged by reconstruction."""
    geometries = 10 if quick else 100
    states = 10 if quick else 100
    worst, cases, bad = 0.0, 0, None
    for _ in range(geometries):
        cx = random_complex(rng)
        p = int(rng.integers(0, 4))
        op = assemble(cx, p)
        alg = MacroAlgebra.macros(op)
        for _ in range(states):
            c = rng.normal(size=(cx.n_active, 1, op.P))
            st = DgState(c, 0.0, np.zeros(1), None)
            before = alg.means(c)[:, 0] * alg.length
            after = alg.means(apply_reconstruction(alg, st).coeffs)[:, 0] * alg.length
            scale = np.bincount(alg.elem_macro, weights=cx.elem_width * np.abs(c[:, 0]).sum(axis=1))
            rel = np.abs(after - before) / np.maximum(scale, 1e-300)
            cases += len(rel)
            if rel.max() > worst:
                worst = float(rel.max())
                bad = {"n": cx.mesh.n_elements, "p": p, "macro": int(rel.argmax())}
    return [CheckResult("conservation", "macro_integrals", worst <= 1e-13, worst, 1e-13, cases,
                        None if worst <= 1e-13 else bad)]


def suite_reproduction(rng, quick=False):
    """A polynomial shared by all members is returned unchanged."""
    worst, cases = 0.0, 0
    for _ in range(10 if quick else 50):
        cx = random_complex(rng)
        p = int(rng.integers(0, 4))
        op = assemble(cx, p)
        alg = MacroAlgebra.macros(op)
        q = rng.normal(size=p + 1) / np.arange(1, p + 2)
        # the global polynomial q(x) in each element's frame
        coeffs = np.empty((cx.n_active, 1, op.P))
        for e in range(cx.n_active):
            # q(left + h xi) in xi-monomials
            shifted = Polynomial(q)(Polynomial([cx.elem_left[e], cx.h])).coef
            coeffs[e, 0] = np.pad(shifted, (0, op.P - len(shifted))) @ op.basis.from_monomial
        st = DgState(coeffs, 0.0, np.zeros(1), None)
        out = apply_reconstruction(alg, st).coeffs
        err = np.abs(out - coeffs).max() / max(1.0, np.abs(coeffs).max())
        worst = max(worst, float(err))
        cases += cx.n_macros
    return [CheckResult("reconstruction", "polynomial_reproduction", worst <= 1e-12, worst, 1e-12, cases)]


def suite_limiter_mean(rng, quick=False):
    """Scalar and positivity limiters keep means and land inside the bounds."""
    basis = LegendreBasis(2)
    n = 1000 if quick else 10_000
    lo = np.zeros(n)
    hi = rng.uniform(0.2, 1.0, size=n)
    a = rng.normal(size=(n, 3)) * [0.1, 0.3, 0.3]
    a[:, 0] += rng.uniform(0.05, 0.95, size=n) / basis.to_monomial[0, 0]
    G = basis.integral_on(lo, hi)
    mean = np.einsum("nk,nk->n", G, a) / hi
    inside = (mean > 0.0) & (mean < 1.0)
    a, lo, hi, G, mean = a[inside], lo[inside], hi[inside], G[inside], mean[inside]
    out, _, _ = scalar_limit_coeffs(basis, a, lo, hi, mean, 0.0, 1.0)
    drift = np.abs(np.einsum("nk,nk->n", G, out) / hi - mean).max()
    dense = np.linspace(0.0, 1.0, 1001)
    x = lo[:, None] + (hi - lo)[:, None] * dense
    vals = np.einsum("nqk,nk->nq", basis.eval(x), out)
    over = max(0.0, float(-vals.min()), float(vals.max() - 1.0))
    res = [
        CheckResult("limiter_mean", "scalar_mean_drift", drift <= 1e-13, float(drift), 1e-13, len(mean)),
        CheckResult("limiter_mean", "scalar_bounds_dense", over <= 1e-12, over, 1e-12, len(mean)),
    ]

    params = AdmissibleSetParams(1.4, 1e-8)
    m = 2000 if quick else 10_000
    P = 3
    ab = rng.normal(size=(m, 3, P)) * 0.5
    ab[:, 0, 0] = rng.uniform(0.05, 2.0, size=m)
    ab[:, 1, 0] = rng.uniform(-1.0, 1.0, size=m)
    ab[:, 2, 0] = 0.5 * ab[:, 1, 0] ** 2 / ab[:, 0, 0] + rng.uniform(0.05, 2.0, size=m)
    # uncut elements: the mean is the zeroth coefficient
    means = ab[:, :, 0].copy()
    rule = gauss_lobatto(3)
    V = basis.eval(rule.nodes)
    vals = np.einsum("qk,nvk->nvq", V, ab)
    lim, _, _ = positivity_limit_coeffs(ab, vals, means, params, V)
    mdrift = float(np.max(np.abs(lim[:, :, 0] - means) / np.maximum(np.abs(means), 1.0)))
    v2 = np.einsum("qk,nvk->nvq", V, lim)
    prs = pressure_from(v2[:, 0], v2[:, 1], v2[:, 2], 1.4)
    low = float(min(v2[:, 0].min(), prs.min()))
    res += [
        CheckResult("limiter_mean", "positivity_mean_drift", mdrift <= 1e-13, mdrift, 1e-13, m),
        CheckResult("limiter_mean", "positivity_floor", low >= 1e-8 - 1e-13, 1e-8 - low, 1e-13, m),
    ]
    return res


def _p0_oracle(cx, ubar_macro, lam, dt, model):
    """ubar - dt/|I_M| (fhat_r - fhat_l) with periodic neighbours."""
    length = np.bincount(cx.elem_macro, weights=cx.elem_width)
    u = ubar_macro
    ul, ur = np.roll(u, 1), np.roll(u, -1)
    fr = lax_friedrichs_flux(u[None, :], ur[None, :], lam, model)[0]
    fl = lax_friedrichs_flux(ul[None, :], u[None, :], lam, model)[0]
    return u - dt / length * (fr - fl)


def suite_p0_oracle(rng, quick=False):
    """p=0 forward-Euler macro means against the closed-form three-point scheme."""
    problem = get_problem("burgers_smooth")
    model = BurgersFlux()
    worst, hull, cases = 0.0, 0.0, 0
    for _ in range(20 if quick else 200):
        cx = random_complex(rng)
        op = assemble(cx, 0, nvar=1, volume_points=2)
        alg = MacroAlgebra.macros(op)
        u = rng.uniform(-1.0, 1.0, size=cx.n_macros)
        c = u[cx.elem_macro][:, None, None].copy()
        st = DgState(c, 0.0, np.zeros(1), None)
        lam = global_lambda(op, st, problem)
        dt = compute_dt(0, cx.delta, cx.h, lam)
        new = forward_euler_update(op, st, dt, problem, lam)
        got = alg.means(new.coeffs)[:, 0]
        ref = _p0_oracle(cx, u, lam, dt, model)
        worst = max(worst, float(np.abs(got - ref).max()))
        lo = np.minimum(np.minimum(np.roll(u, 1), u), np.roll(u, -1))
        hi = np.maximum(np.maximum(np.roll(u, 1), u), np.roll(u, -1))
        hull = max(hull, float(np.max(np.maximum(lo - got, got - hi))))
        cases += cx.n_macros
    return [
        CheckResult("p0_oracle", "three_point_formula", worst <= 1e-13, worst, 1e-13, cases),
        CheckResult("p0_oracle", "stencil_hull", hull <= 1e-13, max(hull, 0.0), 1e-13, cases),
    ]


def suite_mass_spd(rng, quick=False):
    """Stabilized mass blocks stay SPD for tiny cut fractions."""
    alpha = 0.1
    fracs = alpha * np.logspace(-6, 0, 7 if quick else 13)
    worst = np.inf
    cases = 0
    for p in range(4):
        for fr in fracs:
            mesh = build_background_mesh(0.0, 1.0, 10)
            ifaces = InterfaceSet(np.array([3, 6]), np.array([fr, 1.0 - fr]), mesh.h, mesh.x_left)
            cx = MeshComplex(mesh, ifaces, 0.2)
            op = assemble(cx, p)
            for g in op.groups.values():
                ev = np.linalg.eigvalsh(g.blocks)
                sym = np.abs(g.blocks - g.blocks.transpose(0, 2, 1)).max()
                worst = min(worst, float(ev.min() / ev.max(axis=1).max()) if sym < 1e-14 else -1.0)
                cases += len(g.blocks)
    return [CheckResult("mass_spd", "min_relative_eigenvalue", worst > 0.0, worst, 0.0, cases)]


def suite_quadrature(rng, quick=False):
    worst, cases = 0.0, 0
    for n in range(1, 9):
        for kind, rule, deg in (("legendre", gauss_legendre(n), 2 * n - 1),
                                ("lobatto", gauss_lobatto(n + 1), 2 * n - 1)):
            for _ in range(5 if quick else 25):
                c = rng.normal(size=deg + 1)
                exact = npoly.polyval(1.0, npoly.polyint(c)) - npoly.polyval(0.0, npoly.polyint(c))
                got = float(rule.weights @ npoly.polyval(rule.nodes, c))
                worst = max(worst, abs(got - exact) / max(1.0, abs(exact)))
                cases += 1
    return [CheckResult("quadrature", "polynomial_exactness", worst <= 1e-12, worst, 1e-12, cases)]


def suite_free_stream(rng, quick=False):
    """Constant states are steady: per-step change <= 1e-13 over 100 steps."""
    out = []
    for name, const in (("advection_smooth", [0.7]), ("burgers_smooth", [0.4]), ("sod", [1.0, 0.3, 2.5])):
        problem = get_problem(name)
        worst = 0.0
        for p in range(4):
            cx = random_complex(rng, alpha=0.01)
            op = assemble(cx, p, nvar=problem.nvar)
            post = PostProcessor(op, problem, LimiterConfig(tvb=problem.kind == "euler"))
            c = np.zeros((cx.n_active, problem.nvar, op.P))
            c[:, :, 0] = const
            st = DgState(c, 0.0, np.zeros(problem.nvar), None)
            lam = global_lambda(op, st, problem)
            dt = compute_dt(p, cx.delta, cx.h, lam)
            for _ in range(100):
                new = post(forward_euler_update(op, st, dt, problem, lam))
                worst = max(worst, float(np.abs(new.coeffs - st.coeffs).max()))
                st = new
        out.append(CheckResult("free_stream", name, worst <= 1e-13, worst, 1e-13, 400))
    return out


def suite_cfl_probe(rng, quick=False):
    """C = 5 must trip the mean-bound monitor (negative test)."""
    from .harness import RunConfig, run

    tripped = False
    try:
        run(RunConfig("advection_nonsmooth", n=40, p=1, cfl=5.0, t_end=0.5), write=False)
    except (BoundViolation, MeanOutOfBounds):
        tripped = True
    return [CheckResult("cfl_probe", "monitor_trips_at_C5", tripped, float(tripped), 1.0, 1)]


SUITES = {
    "conservation": suite_conservation,
    "reconstruction": suite_reproduction,
    "limiter_mean": suite_limiter_mean,
    "p0_oracle": suite_p0_oracle,
    "mass_spd": suite_mass_spd,
    "quadrature": suite_quadrature,
    "free_stream": suite_free_stream,
    "cfl_probe": suite_cfl_probe,
}


def verify(suite: str = "all", seed: int = 0, quick: bool = False) -> list[CheckResult]:
    names = list(SUITES) if suite == "all" else [suite]
    results = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}; known: all, {', '.join(SUITES)}")
        rng = np.random.default_rng([seed, list(SUITES).index(name)])
        results.extend(SUITES[name](rng, quick))
    return results
