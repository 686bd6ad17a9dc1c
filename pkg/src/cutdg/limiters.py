"""Bound-preserving and slope limiters acting on macro-element polynomials.

Vectorized forms take owner-frame Legendre coefficients ``a`` of shape
(n, P) (or (n, nvar, P)) together with the owner-frame interval [lo, hi] of
each I_M.  ``PostProcessor`` chains detection, reconstruction, TVB and the
bound/positivity limiter into the stage operator applied after every
forward-Euler step.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .basis import LegendreBasis
from .errors import BoundViolation, MeanNotAdmissible, MeanOutOfBounds, ZeroDensity
from .operator import DgState, SemiDiscreteOperator
from .reconstruction import MacroAlgebra

BOUND_TOL = 1e-12
MEAN_TOL = 1e-11
EULER_EPS = 1e-8


@dataclass(frozen=True)
class ScalarBounds:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("need lower < upper")


@dataclass(frozen=True)
class AdmissibleSetParams:
    gamma: float = 1.4
    eps: float = EULER_EPS

    def __post_init__(self):
        if self.gamma <= 1.0 or self.eps <= 0.0:
            raise ValueError("need gamma > 1 and eps > 0")


def pressure_from(rho, m, E, gamma):
    return (gamma - 1.0) * (E - 0.5 * m * m / rho)


def pressure(u, gamma: float = 1.4):
    """p = (gamma - 1)(E - m^2 / (2 rho)); variables on the first axis."""
    u = np.asarray(u, dtype=float)
    if np.any(u[0] == 0.0):
        raise ZeroDensity("pressure undefined at zero density")
    return pressure_from(u[0], u[1], u[2], gamma)


@dataclass
class MacroPolynomial:
    """One polynomial on I_M, stored in the owner element's frame."""

    coeffs: np.ndarray  # (P,) or (nvar, P)
    lo: float  # owner-frame xi of the ends of I_M
    hi: float
    h: float = 1.0
    owner_left: float = 0.0

    @property
    def basis(self) -> LegendreBasis:
        return LegendreBasis(np.shape(self.coeffs)[-1] - 1)

    @property
    def extent(self):
        return self.owner_left + self.h * self.lo, self.owner_left + self.h * self.hi

    def __call__(self, x):
        xi = (np.asarray(x, dtype=float) - self.owner_left) / self.h
        return self.basis.eval(xi) @ np.asarray(self.coeffs).T

    def mean(self):
        b = self.basis
        return (b.integral_on(self.lo, self.hi) @ np.asarray(self.coeffs).T) / (self.hi - self.lo)


# -- exact extrema and the scalar limiter ---------------------------------------------
def exact_extrema_coeffs(basis: LegendreBasis, a: np.ndarray, lo, hi):
    """(min, max) of each row of Legendre coefficients a (n, P) over [lo, hi]."""
    if basis.p > 3:
        raise ValueError("exact extrema implemented for degree <= 3")
    mono = np.ascontiguousarray(a @ basis.to_monomial)
    return kernels.poly_extrema(mono, np.broadcast_to(lo, (len(a),)), np.broadcast_to(hi, (len(a),)))


def exact_extrema(poly: MacroPolynomial):
    """Global (min, max) of a scalar polynomial over I_M."""
    c = np.atleast_2d(np.asarray(poly.coeffs, dtype=float))
    mn, mx = exact_extrema_coeffs(poly.basis, c, np.array([poly.lo]), np.array([poly.hi]))
    return float(mn[0]), float(mx[0])


def scalar_limit_coeffs(basis, a, lo, hi, mean, lower, upper, strict=True):
    """Scale rows of a about their means into [lower, upper].

    Returns (limited coefficients, theta, indices of out-of-bound means).
    Non-strict mode collapses such rows to their mean instead of raising.
    """
    mean = np.asarray(mean, dtype=float)
    vmin, vmax = exact_extrema_coeffs(basis, a, lo, hi)
    bad = (mean < lower - MEAN_TOL) | (mean > upper + MEAN_TOL)
    if np.any(bad) and strict:
        i = int(np.nonzero(bad)[0][0])
        raise MeanOutOfBounds(f"mean {mean[i]:.17g} outside [{lower}, {upper}]")
    theta = kernels.scalar_theta(mean, vmin, vmax, float(lower), float(upper))
    theta = np.where(bad, 0.0, theta)
    out = theta[:, None] * a
    out[:, 0] += (1.0 - theta) * mean
    return out, theta, np.nonzero(bad)[0]


def scalar_bound_limiter(poly: MacroPolynomial, mean: float, bounds: ScalarBounds) -> MacroPolynomial:
    a = np.atleast_2d(np.asarray(poly.coeffs, dtype=float))
    out, _, _ = scalar_limit_coeffs(
        poly.basis, a, np.array([poly.lo]), np.array([poly.hi]), np.array([mean]), bounds.lower, bounds.upper
    )
    return MacroPolynomial(out[0], poly.lo, poly.hi, poly.h, poly.owner_left)


# -- positivity ------------------------------------------------------------------------
def positivity_targets(vals: np.ndarray, means: np.ndarray, params: AdmissibleSetParams):
    """Per-macro targets for density and pressure.

    A relative margin of 1e-6 plus a round-off allowance scaled by the local
    magnitudes keeps the limited point values at or above eps after the
    coefficients are re-evaluated.  Targets never exceed the mean itself.
    """
    g = params.gamma
    rho_scale = np.maximum(np.abs(vals[:, 0]).max(axis=1), np.abs(means[:, 0]))
    e_scale = np.maximum(np.abs(vals[:, 2]).max(axis=1), np.abs(means[:, 2]))
    eps_r = params.eps * (1.0 + 1e-6) + 1e-13 * rho_scale
    eps_p = params.eps * (1.0 + 1e-6) + 1e-13 * (g - 1.0) * e_scale
    pbar = pressure_from(means[:, 0], means[:, 1], means[:, 2], g)
    return np.minimum(eps_r, means[:, 0]), np.minimum(eps_p, pbar), pbar


def _scale_about_means(a, means, t1, t2):
    out = a.copy()
    out[:, 0] = t1[:, None] * a[:, 0]
    out[:, 0, 0] += (1.0 - t1) * means[:, 0]
    out = t2[:, None, None] * out
    out[:, :, 0] += (1.0 - t2)[:, None] * means
    return out


def _violations(out, V, eps, gamma):
    v = np.einsum("npk,nvk->nvp", V, out) if V.ndim == 3 else np.einsum("pk,nvk->nvp", V, out)
    with np.errstate(divide="ignore", invalid="ignore"):
        prs = pressure_from(v[:, 0], v[:, 1], v[:, 2], gamma)
    return np.any((v[:, 0] < eps) | ~(prs >= eps), axis=1)


def positivity_limit_coeffs(a, vals, means, params: AdmissibleSetParams, V=None):
    """Two-stage positivity limiter on macro polynomials.

    a: (n, 3, P) coefficients, vals: (n, 3, k) values at the check points,
    means: (n, 3) means over I_M.  Returns limited coefficients and thetas.
    With the basis table V ((n, k, P) or (k, P)) the limited coefficients are
    re-evaluated, and rows that round-off pushed below eps get theta2 bisected.
    """
    if np.any(means[:, 0] <= 0.0):
        raise MeanNotAdmissible("non-positive mean density")
    eps_r, eps_p, pbar = positivity_targets(vals, means, params)
    if np.any(pbar <= 0.0):
        raise MeanNotAdmissible("non-positive mean pressure")
    t1, t2 = kernels.positivity_thetas(
        vals[:, 0], vals[:, 1], vals[:, 2], means[:, 0], means[:, 1], means[:, 2], eps_r, eps_p, params.gamma
    )
    out = _scale_about_means(a, means, t1, t2)
    if V is None:
        return out, t1, t2
    bad = np.nonzero(_violations(out, V, params.eps, params.gamma))[0]
    if len(bad):
        Vb = V[bad] if V.ndim == 3 else V
        lo = np.zeros(len(bad))
        hi = t2[bad].copy()
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            fail = _violations(_scale_about_means(a[bad], means[bad], t1[bad], mid), Vb, params.eps, params.gamma)
            lo = np.where(fail, lo, mid)
            hi = np.where(fail, mid, hi)
        t2 = t2.copy()
        t2[bad] = lo
        out[bad] = _scale_about_means(a[bad], means[bad], t1[bad], lo)
    return out, t1, t2


def euler_positivity_limiter(
    poly: MacroPolynomial, means, params: AdmissibleSetParams, pts
) -> MacroPolynomial:
    """Limit one 3-component polynomial so rho, p >= eps at the points `pts` (physical x)."""
    a = np.asarray(poly.coeffs, dtype=float)[None]
    vals = np.asarray(poly(pts), dtype=float).T[None]
    out, _, _ = positivity_limit_coeffs(a, vals, np.asarray(means, dtype=float)[None], params)
    return MacroPolynomial(out[0], poly.lo, poly.hi, poly.h, poly.owner_left)


# -- TVB ----------------------------------------------------------------------------------
def minmod(*args):
    """Common-sign minimum magnitude; NaN arguments are ignored."""
    A = np.stack(np.broadcast_arrays(*[np.asarray(x, dtype=float) for x in args]))
    present = ~np.isnan(A)
    S = np.where(present, np.sign(A), 0.0)
    pos = np.all(~present | (S > 0), axis=0)
    neg = np.all(~present | (S < 0), axis=0)
    mag = np.where(present, np.abs(A), np.inf).min(axis=0)
    out = np.where(pos, mag, np.where(neg, -mag, 0.0))
    return np.where(np.isinf(out), 0.0, out)


def tvb_minmod(a1, a2, a3, M_tvb: float = 0.0, h: float = 1.0):
    a1 = np.asarray(a1, dtype=float)
    # a NaN first argument has nothing to compare against
    if np.any(np.isnan(a1)):
        out = np.where(np.abs(a1) <= M_tvb * h * h, a1, minmod(a1, a2, a3))
    else:
        out = kernels.minmod3(a1, a2, a3, M_tvb * h * h)
    return out if out.ndim else float(out)


def _tvb_neighbours(alg: MacroAlgebra, g, periodic: bool, period: float):
    """Neighbour macro indices (alg.n marks none) and centre distances, cached per group."""
    key = ("tvb", id(g), bool(periodic), float(period))
    hit = alg.cache.get(key)
    if hit is not None:
        return hit
    n_all = alg.n
    ids = g.ids
    c = alg.center[ids]
    li = ids - 1
    ri = ids + 1
    cl = np.where(li >= 0, alg.center[np.clip(li, 0, n_all - 1)], np.nan)
    cr = np.where(ri < n_all, alg.center[np.clip(ri, 0, n_all - 1)], np.nan)
    if periodic:
        cl = np.where(li < 0, alg.center[-1] - period, cl)
        cr = np.where(ri >= n_all, alg.center[0] + period, cr)
        li = np.where(li < 0, n_all - 1, li)
        ri = np.where(ri >= n_all, 0, ri)
    else:
        li = np.where(li < 0, n_all, li)
        ri = np.where(ri >= n_all, n_all, ri)
    out = (li, ri, c - cl, cr - c)
    alg.cache[key] = out
    return out


def tvb_limit_coeffs(alg: MacroAlgebra, g, a, means_all, M_tvb, periodic, period):
    """TVB limiting of macro polynomials a (n, nvar, P), componentwise.

    Returns (a_limited, troubled) where troubled marks rows replaced by the
    limited linear polynomial.
    """
    ids = g.ids
    ubar = means_all[ids]
    li, ri, dcl, dcr = _tvb_neighbours(alg, g, periodic, period)
    # missing neighbours read a NaN row
    padded = np.vstack((means_all, np.full((1, means_all.shape[1]), np.nan)))
    sig_r = (padded[ri] - ubar) / dcr[:, None]
    sig_l = (ubar - padded[li]) / dcl[:, None]
    c = alg.center[ids]
    L = alg.length[ids]
    vl, vr = alg.endpoint_values(g, a)
    dev_r = vr - ubar
    dev_l = ubar - vl
    half = L[:, None]
    mod_r = tvb_minmod(dev_r, sig_r * half, sig_l * half, M_tvb, alg.h)
    mod_l = tvb_minmod(dev_l, sig_r * half, sig_l * half, M_tvb, alg.h)
    hit = (mod_r != dev_r) | (mod_l != dev_l)  # (n, nvar)
    troubled = np.any(hit, axis=1)
    if not np.any(hit):
        return a, troubled
    sigma = kernels.minmod3((vr - vl) / L[:, None], sig_r, sig_l)
    # linear polynomial ubar + sigma (x - c) in owner xi: x = owner_left + h xi
    P = a.shape[-1]
    b = np.zeros(a.shape)
    b[..., 0] = ubar + sigma * (g.owner_left - c)[:, None]
    if P > 1:
        b[..., 1] = sigma * alg.h
    lin = alg.from_monomial(b)
    out = np.where(hit[..., None], lin, a)
    return out, troubled


# -- the stage operator ------------------------------------------------------------------
@dataclass
class LimiterConfig:
    reconstruction: str = "all"  # all | on_violation | off
    bound_limiter: bool = True
    tvb: bool = False
    tvb_m: float = 0.0
    strict: bool = True

    def __post_init__(self):
        if self.reconstruction not in ("all", "on_violation", "off"):
            raise ValueError(f"unknown reconstruction mode {self.reconstruction!r}")


@dataclass
class PostStats:
    reconstructed: int = 0
    limited: int = 0
    troubled: int = 0
    mean_violations: int = 0
    history: list = field(default_factory=list)


class PostProcessor:
    """Reconstruction, TVB and bound/positivity limiting after each Euler step."""

    def __init__(self, op: SemiDiscreteOperator, problem, cfg: LimiterConfig):
        self.op = op
        self.problem = problem
        self.cfg = cfg
        self.macro = MacroAlgebra.macros(op)
        self.elem = MacroAlgebra.elements(op)
        self.stats = PostStats()
        self.euler = problem.kind == "euler"
        self.period = op.cx.total_length

    @property
    def active(self) -> bool:
        c = self.cfg
        return c.reconstruction != "off" or c.bound_limiter or c.tvb

    def detect(self, state: DgState) -> np.ndarray:
        """Macro-elements whose member polynomials leave the admissible range."""
        cx = self.op.cx
        if self.euler:
            vals = self.op.values_at_checkpoints(state.coeffs)
            prm = self.problem.admissible
            p = pressure_from(vals[0], vals[1], vals[2], prm.gamma)
            bad_pt = (vals[0] < prm.eps) | ~(p >= prm.eps)
            bad_elem = np.zeros(cx.n_active, dtype=bool)
            bad_elem[self.op.check_elem[bad_pt]] = True
        else:
            b = self.problem.bounds
            alg = self.elem
            bad_elem = np.zeros(cx.n_active, dtype=bool)
            for g in alg.groups:
                a = alg.macro_poly(g, state.coeffs)[:, 0]
                mn, mx = exact_extrema_coeffs(alg.basis, a, g.lo, g.hi)
                bad_elem[g.elems[:, 0]] = (mn < b.lower - BOUND_TOL) | (mx > b.upper + BOUND_TOL)
        flagged = np.zeros(cx.n_macros, dtype=bool)
        flagged[cx.elem_macro[bad_elem]] = True
        return flagged

    def __call__(self, state: DgState) -> DgState:
        if not self.active:
            return state
        cfg = self.cfg
        if cfg.reconstruction == "off":
            alg = self.elem
            flagged = np.ones(alg.n, dtype=bool)
        else:
            alg = self.macro
            flagged = np.ones(alg.n, dtype=bool) if cfg.reconstruction == "all" else self.detect(state)

        out = state.copy()
        means_all = alg.means(state.coeffs) if (cfg.tvb and self.op.p > 0) else None
        polys = []
        for g in alg.groups:
            a = alg.macro_poly(g, state.coeffs)
            rows = flagged[g.ids]
            if cfg.tvb and self.op.p > 0:
                a_tvb, troubled = tvb_limit_coeffs(
                    alg, g, a, means_all, cfg.tvb_m, self.problem.periodic, self.period
                )
                if cfg.reconstruction == "on_violation":
                    rows = rows | troubled
                a = np.where(troubled[:, None, None], a_tvb, a)
                self.stats.troubled += int(troubled.sum())
            polys.append((g, a, rows))

        for g, a, rows in polys:
            if not np.any(rows):
                continue
            idx = np.nonzero(rows)[0]
            a = a[idx]
            if cfg.bound_limiter:
                a = self._limit(alg, g, idx, a)
            alg.scatter(g, a, out.coeffs, idx)
            self.stats.reconstructed += len(idx)

        if cfg.reconstruction == "off":
            out.smooth = None
        else:
            smooth = np.zeros(alg.n, dtype=bool) if state.smooth is None else state.smooth.copy()
            smooth |= flagged
            for g, _, rows in polys:
                smooth[g.ids[rows]] = True
            out.smooth = smooth
        return out

    def _limit(self, alg: MacroAlgebra, g, idx, a):
        mean = np.einsum("nk,nvk->nv", g.G[idx], a) / g.length[idx, None]
        if self.euler:
            vals = np.einsum("npk,nvk->nvp", g.V[idx], a)
            out, t1, t2 = positivity_limit_coeffs(a, vals, mean, self.problem.admissible, g.V[idx])
            self.stats.limited += int(np.sum((t1 < 1.0) | (t2 < 1.0)))
            return out
        b = self.problem.bounds
        lim, theta, bad = scalar_limit_coeffs(
            alg.basis, a[:, 0], g.lo[idx], g.hi[idx], mean[:, 0], b.lower, b.upper, strict=self.cfg.strict
        )
        self.stats.mean_violations += len(bad)
        self.stats.limited += int(np.sum(theta < 1.0))
        return lim[:, None, :]


def check_bounds(op: SemiDiscreteOperator, alg_elem: MacroAlgebra, state: DgState, problem):
    """Diagnostics: (min, max) for scalars using exact extrema on every K, or
    (min rho, min p) over all check points for Euler."""
    if problem.kind == "euler":
        vals = op.values_at_checkpoints(state.coeffs)
        p = pressure_from(vals[0], vals[1], vals[2], problem.admissible.gamma)
        return float(vals[0].min()), float(p.min())
    lo, hi = np.inf, -np.inf
    for g in alg_elem.groups:
        a = alg_elem.macro_poly(g, state.coeffs)[:, 0]
        if op.p <= 3:
            mn, mx = exact_extrema_coeffs(alg_elem.basis, a, g.lo, g.hi)
        else:
            v = np.einsum("npk,nk->np", g.V, a)
            mn, mx = v.min(axis=1), v.max(axis=1)
        lo = min(lo, float(mn.min()))
        hi = max(hi, float(mx.max()))
    return lo, hi


def enforce_bounds(lo: float, hi: float, problem, step=None, tol: float = BOUND_TOL):
    """Raise BoundViolation if diagnostics leave the admissible range."""
    if problem.kind == "euler":
        eps = problem.admissible.eps
        if not (lo >= eps * (1 - 1e-9) and hi >= eps * (1 - 1e-9)):
            raise BoundViolation(f"rho_min={lo:.3g}, p_min={hi:.3g} below eps", step=step, value=min(lo, hi))
    else:
        b = problem.bounds
        if lo < b.lower - tol or hi > b.upper + tol:
            raise BoundViolation(f"range [{lo:.17g}, {hi:.17g}] outside [{b.lower}, {b.upper}]", step=step)
