"""Flux models, boundary conditions and the concrete test problems."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, NoReference
from .limiters import AdmissibleSetParams, ScalarBounds, pressure_from
from .operator import lax_friedrichs_flux
from .riemann import ExactRiemannSolver
from .sedov import PlanarSedov


# -- flux models (variables on axis 1) ----------------------------------------------------
class LinearFlux:
    name = "linear"
    nvar = 1

    def __init__(self, a: float = 1.0):
        self.a = a

    def flux(self, u):
        return self.a * u

    def speed(self, u):
        return np.full(u[:, 0].shape, abs(self.a))

    def char_speed(self, u):
        return np.full(u[:, 0].shape, self.a)


class BurgersFlux:
    name = "burgers"
    nvar = 1

    def flux(self, u):
        return 0.5 * u * u

    def speed(self, u):
        return np.abs(u[:, 0])

    def char_speed(self, u):
        return u[:, 0]


class EulerFlux:
    name = "euler"
    nvar = 3

    def __init__(self, gamma: float = 1.4):
        self.gamma = gamma

    def flux(self, u):
        rho, m, E = u[:, 0], u[:, 1], u[:, 2]
        v = m / rho
        p = pressure_from(rho, m, E, self.gamma)
        return np.stack((m, m * v + p, (E + p) * v), axis=1)

    def speed(self, u):
        rho, m, E = u[:, 0], u[:, 1], u[:, 2]
        p = pressure_from(rho, m, E, self.gamma)
        with np.errstate(invalid="ignore", divide="ignore"):
            c = np.sqrt(self.gamma * p / rho)
            s = np.abs(m / rho) + c
        return np.where((rho > 0) & (p > 0), s, np.nan)


# -- boundary conditions ------------------------------------------------------------------
@dataclass(frozen=True)
class BoundaryCondition:
    kind: str  # periodic | outflow | inflow | solid_wall
    value: Callable | None = None

    def __post_init__(self):
        if self.kind not in ("periodic", "outflow", "inflow", "solid_wall"):
            raise ConfigError(f"unknown boundary condition {self.kind!r}")
        if self.kind == "inflow" and self.value is None:
            raise ConfigError("inflow boundary needs g(t)")


def ghost_state(bc: BoundaryCondition, trace, t: float, opposite=None):
    """Exterior state for a boundary edge."""
    trace = np.asarray(trace, dtype=float)
    if bc.kind == "periodic":
        if opposite is None:
            raise ConfigError("periodic ghost needs the opposite trace")
        return np.asarray(opposite, dtype=float).copy()
    if bc.kind == "outflow":
        return trace.copy()
    if bc.kind == "inflow":
        return np.broadcast_to(np.asarray(bc.value(t), dtype=float), trace.shape).copy()
    g = trace.copy()
    g[1] = -g[1]
    return g


def step_inflow(t: float) -> np.ndarray:
    return np.array([1.0 if t <= 0.5 else 0.0])


# -- problem container ----------------------------------------------------------------------
@dataclass
class ProblemSpec:
    name: str
    kind: str  # scalar | euler
    models: list
    initial: Callable
    domain: tuple
    bc: tuple
    bounds: ScalarBounds | None = None
    admissible: AdmissibleSetParams | None = None
    exact: Callable | None = None
    reference: str = "none"  # analytic | riemann | sedov | self | none
    breakpoints: tuple = ()
    t_end: float = 1.0
    cut_region: tuple | None = None
    alpha: float = 0.1
    unfitted: bool = False
    interfaces: tuple = ()  # fixed physical interfaces
    nonlinear: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        left, right = self.bc
        if (left.kind == "periodic") != (right.kind == "periodic"):
            raise ConfigError("periodic boundaries must come as a pair")

    @property
    def nvar(self) -> int:
        return self.models[0].nvar

    @property
    def periodic(self) -> bool:
        return self.bc[0].kind == "periodic"

    # operator hooks
    def zone_of(self, sub):
        sub = np.asarray(sub)
        if len(self.models) == 1:
            return np.zeros(sub.shape, dtype=int)
        return np.minimum(sub, len(self.models) - 1)

    def volume_flux(self, uq, elem_sub):
        if len(self.models) == 1:
            return self.models[0].flux(uq)
        zones = self.zone_of(elem_sub)
        F = np.empty_like(uq)
        for z, model in enumerate(self.models):
            sel = zones == z
            if np.any(sel):
                F[sel] = model.flux(uq[sel])
        return F

    def wave_speed(self, vals, zones):
        if len(self.models) == 1:
            return self.models[0].speed(vals)
        s = np.empty(len(vals))
        for z, model in enumerate(self.models):
            sel = zones == z
            if np.any(sel):
                s[sel] = model.speed(vals[sel])
        return s

    def ghost_states(self, first_trace, last_trace, t):
        left, right = self.bc
        gl = ghost_state(left, first_trace, t, opposite=last_trace)
        gr = ghost_state(right, last_trace, t, opposite=first_trace)
        return gl, gr

    def numerical_flux(self, uminus, uplus, lam, edge_kind, elem_sub):
        if len(self.models) == 1:
            return lax_friedrichs_flux(uminus, uplus, lam, self.models[0])
        n = len(uminus) - 1
        zl = np.empty(n + 1, dtype=int)
        zr = np.empty(n + 1, dtype=int)
        zones = self.zone_of(elem_sub)
        zl[1:] = zones
        zl[0] = zones[0]
        zr[:-1] = zones
        zr[-1] = zones[-1]
        out = np.empty_like(uminus)
        same = zl == zr
        for z, model in enumerate(self.models):
            sel = same & (zl == z)
            if np.any(sel):
                out[sel] = lax_friedrichs_flux(uminus[sel], uplus[sel], lam, model)
        for e in np.nonzero(~same)[0]:
            out[e] = interface_flux(
                uminus[e : e + 1], uplus[e : e + 1], lam, self.models[zl[e]], self.models[zr[e]]
            )[0]
        return out

    def exact_solution(self, x, t):
        if self.exact is None:
            raise NoReference(f"no exact solution for {self.name}")
        return np.atleast_2d(self.exact(np.asarray(x, dtype=float), t))


def interface_flux(uL, uR, lam, left_model, right_model):
    """Single-valued coupling flux where the flux function changes.

    Upwind by the sign of the characteristic speeds on both sides; when they
    disagree, a Lax-Friedrichs average of the two one-sided fluxes.
    """
    aL = left_model.char_speed(uL)
    aR = right_model.char_speed(uR)
    fL = left_model.flux(uL)
    fR = right_model.flux(uR)
    up = (aL >= 0) & (aR >= 0)
    down = (aL <= 0) & (aR <= 0)
    lf = 0.5 * (fL + fR) - 0.5 * lam * (uR - uL)
    return np.where(up[:, None], fL, np.where(down[:, None], fR, lf))


def _scalar(fn):
    def u0(x):
        return np.atleast_1d(fn(np.asarray(x, dtype=float)))[None, :]

    return u0


# -- scalar problems -------------------------------------------------------------------
def advection_problem(variant: str = "smooth") -> ProblemSpec:
    periodic = (BoundaryCondition("periodic"), BoundaryCondition("periodic"))
    if variant == "smooth":
        def exact(x, t):
            return (1.0 + 0.5 * np.sin(np.pi * (x - t)))[None, :]

        return ProblemSpec(
            "advection_smooth", "scalar", [LinearFlux(1.0)], lambda x: exact(x, 0.0), (0.0, 2.0), periodic,
            bounds=ScalarBounds(0.5, 1.5), exact=exact, reference="analytic", t_end=1.0,
            cut_region=(0.75, 1.25), alpha=0.1,
        )
    if variant == "nonsmooth":
        def exact(x, t):
            s = np.mod(x - t, 1.0)
            return ((s > 0.1) & (s < 0.5)).astype(float)[None, :]

        return ProblemSpec(
            "advection_nonsmooth", "scalar", [LinearFlux(1.0)], lambda x: exact(x, 0.0), (0.0, 1.0), periodic,
            bounds=ScalarBounds(0.0, 1.0), exact=exact, reference="analytic", breakpoints=(0.1, 0.5),
            t_end=1.0, cut_region=(0.375, 0.625), alpha=0.1,
        )
    if variant == "inflow":
        def exact(x, t):
            s = t - x
            return ((s >= 0.0) & (s <= 0.5)).astype(float)[None, :]

        return ProblemSpec(
            "advection_inflow", "scalar", [LinearFlux(1.0)], lambda x: np.zeros((1, np.size(x))), (0.0, 1.0),
            (BoundaryCondition("inflow", step_inflow), BoundaryCondition("outflow")),
            bounds=ScalarBounds(0.0, 1.0), exact=exact, reference="analytic", t_end=0.75,
            alpha=0.01, unfitted=True,
        )
    raise ConfigError(f"unknown advection variant {variant!r}")


def burgers_exact_smooth(x, t, tol: float = 1e-13):
    """u = sin(pi (x - u t)) by safeguarded Newton, valid for t < 1/pi."""
    x = np.asarray(x, dtype=float)
    if t == 0.0:
        return np.sin(np.pi * x)
    if t >= 1.0 / np.pi:
        raise NoReference("smooth Burgers solution only exists before t = 1/pi")
    u = np.sin(np.pi * x)
    lo = -np.ones_like(u)
    hi = np.ones_like(u)
    for _ in range(100):
        g = u - np.sin(np.pi * (x - u * t))
        dg = 1.0 + np.pi * t * np.cos(np.pi * (x - u * t))
        lo = np.where(g < 0, u, lo)
        hi = np.where(g > 0, u, hi)
        un = u - g / dg
        un = np.where((un <= lo) | (un >= hi), 0.5 * (lo + hi), un)
        if np.max(np.abs(un - u)) < tol:
            return un
        u = un
    return u


def burgers_riemann_exact(x, t, uL, uR):
    x = np.asarray(x, dtype=float)
    if t <= 0.0:
        return np.where(x <= 0.0, uL, uR)
    if uL <= uR:
        return np.clip(x / t, uL, uR)
    s = 0.5 * (uL + uR)
    return np.where(x < s * t, uL, uR)


def burgers_problem(variant: str = "smooth", uL: float = -1.0, uR: float = 1.0, t_end: float | None = None) -> ProblemSpec:
    if variant == "smooth":
        def exact(x, t):
            return burgers_exact_smooth(x, t)[None, :]

        return ProblemSpec(
            "burgers_smooth", "scalar", [BurgersFlux()], lambda x: exact(x, 0.0), (0.0, 2.0),
            (BoundaryCondition("periodic"), BoundaryCondition("periodic")),
            bounds=ScalarBounds(-1.0, 1.0), exact=exact, reference="analytic",
            t_end=0.2 if t_end is None else t_end, cut_region=(0.75, 1.25), alpha=0.1, nonlinear=True,
        )
    if variant == "riemann":
        def exact(x, t):
            return burgers_riemann_exact(x, t, uL, uR)[None, :]

        return ProblemSpec(
            f"burgers_riemann", "scalar", [BurgersFlux()], lambda x: exact(x, 0.0), (-2.0, 2.0),
            (BoundaryCondition("outflow"), BoundaryCondition("outflow")),
            bounds=ScalarBounds(min(uL, uR), max(uL, uR)), exact=exact, reference="analytic",
            breakpoints=(0.0,), t_end=0.5 if t_end is None else t_end, cut_region=(-0.5, 0.5), alpha=0.1,
            nonlinear=True, params={"uL": uL, "uR": uR},
        )
    raise ConfigError(f"unknown Burgers variant {variant!r}")


def discontinuous_flux_problem(x_gamma: float = 2e-5) -> ProblemSpec:
    """Transport for x < x_gamma, Burgers for x > x_gamma."""

    def u0(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < -0.5, 0.5, 2.0)[None, :]

    return ProblemSpec(
        "discontinuous_flux", "scalar", [LinearFlux(1.0), BurgersFlux()], u0, (-1.0, 1.0),
        (BoundaryCondition("outflow"), BoundaryCondition("outflow")),
        bounds=ScalarBounds(0.5, 2.0), breakpoints=(-0.5,), t_end=0.9, interfaces=(x_gamma,),
        nonlinear=True, params={"x_gamma": x_gamma},
    )


# -- Euler problems ----------------------------------------------------------------------
def _prim_to_cons(rho, u, p, gamma):
    return np.stack((rho, rho * u, p / (gamma - 1.0) + 0.5 * rho * u * u))


def _piecewise(splits, states, gamma):
    splits = np.asarray(splits, dtype=float)

    def u0(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.searchsorted(splits, x, side="right")
        S = np.asarray(states, dtype=float)[idx]
        return _prim_to_cons(S[:, 0], S[:, 1], S[:, 2], gamma)

    return u0


EULER_NAMES = ("low_density", "sod", "double_rarefaction", "sedov", "two_blast")


def euler_problem(name: str, n: int = 200, gamma: float = 1.4, eps: float | None = None) -> ProblemSpec:
    outflow = (BoundaryCondition("outflow"), BoundaryCondition("outflow"))
    model = [EulerFlux(gamma)]
    if name == "low_density":
        def exact(x, t):
            rho = 1.0 + 0.99 * np.sin(x - t)
            return _prim_to_cons(rho, np.ones_like(rho), np.ones_like(rho), gamma)

        return ProblemSpec(
            name, "euler", model, lambda x: exact(np.asarray(x, dtype=float), 0.0), (0.0, 2 * np.pi),
            (BoundaryCondition("periodic"), BoundaryCondition("periodic")),
            admissible=AdmissibleSetParams(gamma, eps or 1e-8), exact=exact, reference="analytic", t_end=1.0,
            cut_region=(0.75 * np.pi, 1.25 * np.pi), alpha=0.01, nonlinear=True,
        )
    if name in ("sod", "double_rarefaction"):
        if name == "sod":
            L, R, x0, dom, t_end, cut = (1.0, 0.0, 1.0), (0.125, 0.0, 0.1), 0.5, (0.0, 1.0), 0.2, (0.375, 0.625)
        else:
            L, R, x0, dom, t_end, cut = (7.0, -1.0, 0.2), (7.0, 1.0, 0.2), 0.0, (-1.0, 1.0), 0.6, (-0.25, 0.25)
        solver = ExactRiemannSolver(L, R, gamma, x0)
        return ProblemSpec(
            name, "euler", model, _piecewise([x0], [L, R], gamma), dom, outflow,
            admissible=AdmissibleSetParams(gamma, eps or 1e-8), exact=solver.conservative, reference="riemann",
            breakpoints=(x0,), t_end=t_end, cut_region=cut, alpha=0.01, nonlinear=True,
            params={"solver": solver},
        )
    if name == "sedov":
        h = 4.0 / n
        E_blast, E_bg = 3.2e6, 1e-12

        def u0(x):
            x = np.atleast_1d(np.asarray(x, dtype=float))
            E = np.where((x >= 0.0) & (x <= h), E_blast, E_bg)
            return np.stack((np.ones_like(x), np.zeros_like(x), E))

        ref = PlanarSedov(E_blast * h, 1.0, gamma, center=0.5 * h, p_background=(gamma - 1.0) * E_bg)
        return ProblemSpec(
            name, "euler", model, u0, (-2.0, 2.0), outflow,
            admissible=AdmissibleSetParams(gamma, eps or 1e-13), exact=ref.conservative, reference="sedov",
            breakpoints=(0.0, h), t_end=1e-3, cut_region=(-0.5, 0.5), alpha=0.01, nonlinear=True,
            params={"similarity": ref, "n": n},
        )
    if name == "two_blast":
        u0 = _piecewise([0.1, 0.9], [(1.0, 0.0, 1e3), (1.0, 0.0, 1e-2), (1.0, 0.0, 1e2)], gamma)
        return ProblemSpec(
            name, "euler", model, u0, (0.0, 1.0), (BoundaryCondition("solid_wall"), BoundaryCondition("solid_wall")),
            admissible=AdmissibleSetParams(gamma, eps or 1e-8), reference="self", breakpoints=(0.1, 0.9),
            t_end=0.038, alpha=0.01, unfitted=True, nonlinear=True,
        )
    raise ConfigError(f"unknown Euler problem {name!r}")


def get_problem(name: str, **kw) -> ProblemSpec:
    """Problem by registry name."""
    if name in ("advection_smooth", "advection_nonsmooth", "advection_inflow"):
        return advection_problem(name.split("_", 1)[1])
    if name == "burgers_smooth":
        return burgers_problem("smooth", t_end=kw.get("t_end"))
    if name == "burgers_riemann":
        return burgers_problem("riemann", kw.get("uL", -1.0), kw.get("uR", 1.0), kw.get("t_end"))
    if name == "discontinuous_flux":
        return discontinuous_flux_problem(kw.get("x_gamma", 2e-5))
    if name in EULER_NAMES:
        return euler_problem(name, n=kw.get("n", 200), gamma=kw.get("gamma", 1.4), eps=kw.get("eps"))
    raise ConfigError(f"unknown problem {name!r}")


PROBLEM_NAMES = (
    "advection_smooth", "advection_nonsmooth", "advection_inflow", "burgers_smooth", "burgers_riemann",
    "discontinuous_flux",
) + EULER_NAMES


def reference_solution(problem: ProblemSpec, x, t):
    """Reference state (nvar, len(x)) for problems with an analytic or exact handle."""
    return problem.exact_solution(x, t)
