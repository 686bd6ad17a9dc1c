"""SSP time stepping around the stabilized forward-Euler step.

Every stage is a convex combination of forward-Euler steps followed by the
post-processing stage P (reconstruction, TVB, bound/positivity limiting).
"""
from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .basis import first_lobatto_weight
from .errors import BoundViolation, ColdHistory, ConfigError, InadmissibleState
from .limiters import MEAN_TOL, PostProcessor, check_bounds, pressure_from
from .operator import DgState, Rate, SemiDiscreteOperator, combine, euler_update, global_lambda

RK3_STAGES = ((0.0, 1.0), (0.75, 0.25), (1.0 / 3.0, 2.0 / 3.0))
MS3_WEIGHTS = (16.0 / 27.0, 3.0, 11.0 / 27.0, 12.0 / 11.0)
MS3_SSP = 1.0 / 3.0

# stage k: P(a u^n + b (u_prev + dt L(u_prev))), a convex combination of forward-Euler steps
assert all(abs(a + b - 1.0) < 1e-15 and a >= 0 and b > 0 for a, b in RK3_STAGES)
assert abs(MS3_WEIGHTS[0] + MS3_WEIGHTS[2] - 1.0) < 1e-15


def compute_dt(p: int, delta: float, h: float, lam: float, C: float = 1.0, exponent: float = 1.0) -> float:
    """dt = C delta h^e w* / lambda with w* = 1 for p = 0 and the first Gauss-Lobatto weight otherwise."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if not 0 < C:
        raise ValueError("C must be positive")
    w = 1.0 if p == 0 else first_lobatto_weight(p)
    return C * delta * h**exponent * w / lam


@dataclass
class StepperConfig:
    integrator: str = "ssp_rk3"  # ssp_rk3 | ssp_ms3
    cfl: float = 1.0
    dt_law: str = "cfl"  # cfl | fixed
    dt_coeff: float = 0.0  # fixed law: dt = dt_coeff * h^exponent
    exponent: float = 1.0
    lambda_refresh: str = "step"  # step | stage
    monitor: bool | None = None  # None: on for the cfl law, off for fixed laws
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.integrator not in ("ssp_rk3", "ssp_ms3"):
            raise ConfigError(f"unknown integrator {self.integrator!r}")
        if self.dt_law not in ("cfl", "fixed"):
            raise ConfigError(f"unknown dt law {self.dt_law!r}")
        if self.dt_law == "cfl" and not 0 < self.cfl:
            raise ConfigError("cfl factor must be positive")
        if self.dt_law == "fixed" and self.dt_coeff <= 0:
            raise ConfigError("fixed dt law needs dt_coeff > 0")
        if self.lambda_refresh not in ("step", "stage"):
            raise ConfigError(f"unknown lambda refresh {self.lambda_refresh!r}")

    @property
    def monitoring(self) -> bool:
        return self.dt_law == "cfl" if self.monitor is None else bool(self.monitor)


class Pipeline:
    """Spatial operator + post-processing, with the current wave-speed bound."""

    def __init__(self, op: SemiDiscreteOperator, problem, post: PostProcessor, cfg: StepperConfig):
        self.op = op
        self.problem = problem
        self.post = post
        self.cfg = cfg
        self.lam = None
        self.step_index = 0
        self.mean_alerts = 0

    def refresh_lambda(self, state: DgState) -> float:
        try:
            self.lam = global_lambda(self.op, state, self.problem)
        except InadmissibleState as exc:
            raise InadmissibleState(str(exc), step=self.step_index) from None
        return self.lam

    def rate(self, state: DgState) -> Rate:
        if self.lam is None or self.cfg.lambda_refresh == "stage":
            self.refresh_lambda(state)
        return self.op.rate(state, self.problem, self.lam)

    def finish(self, state: DgState) -> DgState:
        """Mean monitor on the unlimited stage value, then P."""
        self.check_means(state)
        return self.post(state)

    def check_means(self, state: DgState) -> None:
        alg = self.post.macro
        means = alg.means(state.coeffs)
        if self.problem.kind == "euler":
            p = pressure_from(means[:, 0], means[:, 1], means[:, 2], self.problem.admissible.gamma)
            bad = ~((means[:, 0] > 0) & (p > 0))
        else:
            b = self.problem.bounds
            bad = (means[:, 0] < b.lower - MEAN_TOL) | (means[:, 0] > b.upper + MEAN_TOL)
        if np.any(bad):
            self.mean_alerts += int(bad.sum())
            if self.cfg.monitoring:
                raise BoundViolation(
                    f"{int(bad.sum())} macro-element means left the invariant set (time step too large?)",
                    step=self.step_index,
                )


def ssp_rk3_step(state: DgState, dt: float, pipe: Pipeline) -> DgState:
    u = state
    for k, (a, b) in enumerate(RK3_STAGES):
        prev = state if k == 0 else u
        fe = euler_update(prev, pipe.rate(prev), dt)
        stage = fe if k == 0 else combine([(a, state), (b, fe)])
        u = pipe.finish(stage)
    return u


def warmup_substeps(h: float) -> int:
    """RK3 sub-steps per multistep warm-up step.

    Limited RK3 stages carry a low-order error near extrema; sub-stepping by
    ceil(h^(-1/3)) keeps that start-up error below the spatial order.
    """
    return max(1, math.ceil(h ** (-1.0 / 3.0) - 1e-12))


class MultistepHistory:
    """Last four accepted states with their operator evaluations."""

    def __init__(self):
        self.states = deque(maxlen=4)
        self.rates = deque(maxlen=4)

    def push(self, state: DgState, rate: Rate | None = None):
        self.states.append(state)
        self.rates.append(rate)

    @property
    def warm(self) -> bool:
        return len(self.states) == 4

    def __len__(self):
        return len(self.states)


def ssp_ms3_step(hist: MultistepHistory, dt: float, pipe: Pipeline) -> DgState:
    if not hist.warm:
        raise ColdHistory("multistep needs four stored levels")
    a, b, c, d = MS3_WEIGHTS
    un, um3 = hist.states[-1], hist.states[0]
    rn = hist.rates[-1]
    if rn is None:
        rn = pipe.rate(un)
        hist.rates[-1] = rn
    rm3 = hist.rates[0]
    if rm3 is None:
        rm3 = pipe.rate(um3)
        hist.rates[0] = rm3
    s1 = euler_update(un, rn, b * dt)
    s2 = euler_update(um3, rm3, d * dt)
    new = pipe.finish(combine([(a, s1), (c, s2)]))
    return new


@dataclass
class Diagnostics:
    scalar: bool
    t: list = field(default_factory=list)
    dt: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    net: list = field(default_factory=list)  # mass - accumulated inflow, all variables
    lo: list = field(default_factory=list)
    hi: list = field(default_factory=list)

    def record(self, t, dt, mass, inflow, lo, hi):
        self.t.append(float(t))
        self.dt.append(float(dt))
        self.mass.append(float(mass[0]))
        self.net.append(np.asarray(mass - inflow, dtype=float))
        self.lo.append(lo)
        self.hi.append(hi)

    def as_arrays(self):
        return {k: np.asarray(getattr(self, k)) for k in ("t", "dt", "mass", "net", "lo", "hi")}

    @property
    def columns(self):
        return ("t", "dt", "mass", "min", "max") if self.scalar else ("t", "dt", "mass", "min_rho", "min_p")


@dataclass
class IntegrationResult:
    state: DgState
    diagnostics: Diagnostics
    steps: int
    wall_time: float
    mean_alerts: int
    dt_nominal: float


def _record(diag, pipe, state, dt):
    op = pipe.op
    lo, hi = check_bounds(op, pipe.post.elem, state, pipe.problem)
    diag.record(state.t, dt, op.total_mass(state), state.inflow, lo, hi)


def integrate(op: SemiDiscreteOperator, problem, post: PostProcessor, cfg: StepperConfig, t_end: float, initial=None):
    """Project, post-process and march to t_end; returns an IntegrationResult."""
    t0 = time.perf_counter()
    pipe = Pipeline(op, problem, post, cfg)
    if initial is None:
        state = op.l2_project(problem.initial, problem.nvar, problem.breakpoints)
        state = post(state)
    else:
        state = initial
    diag = Diagnostics(problem.kind != "euler")
    _record(diag, pipe, state, 0.0)
    if t_end <= 0.0:
        return IntegrationResult(state, diag, 0, time.perf_counter() - t0, 0, 0.0)

    h, p, delta = op.h, op.p, op.cx.delta
    fixed = cfg.dt_law == "fixed" or cfg.integrator == "ssp_ms3"
    if cfg.dt_law == "fixed":
        dt0 = cfg.dt_coeff * h**cfg.exponent
    else:
        lam = pipe.refresh_lambda(state)
        dt0 = compute_dt(p, delta, h, lam, cfg.cfl, cfg.exponent)
        if cfg.integrator == "ssp_ms3":
            dt0 *= MS3_SSP
    if fixed:
        n_steps = max(1, math.ceil(t_end / dt0 - 1e-9))
        dt_fixed = t_end / n_steps
    hist = MultistepHistory() if cfg.integrator == "ssp_ms3" else None
    if hist is not None:
        hist.push(state)

    step = 0
    while state.t < t_end * (1 - 1e-14) and step < cfg.max_steps:
        pipe.step_index = step
        pipe.refresh_lambda(state)
        if fixed:
            dt = dt_fixed
        else:
            dt = compute_dt(p, delta, h, pipe.lam, cfg.cfl, cfg.exponent)
            dt = min(dt, t_end - state.t)
        if hist is not None and hist.warm:
            new = ssp_ms3_step(hist, dt, pipe)
        elif hist is not None:
            new = state
            for _ in range(warmup_substeps(h)):
                new = ssp_rk3_step(new, dt / warmup_substeps(h), pipe)
        else:
            new = ssp_rk3_step(state, dt, pipe)
        step += 1
        if fixed:
            new.t = min(step * dt_fixed, t_end) if step < n_steps else t_end
        elif t_end - new.t <= 1e-14 * t_end:
            new.t = t_end
        state = new
        if hist is not None:
            hist.push(state)
        _record(diag, pipe, state, dt)
        if cfg.monitoring:
            from .limiters import enforce_bounds

            if post.cfg.bound_limiter or problem.kind == "euler":
                enforce_bounds(diag.lo[-1], diag.hi[-1], problem, step=step)
        if fixed and step >= n_steps:
            break
    return IntegrationResult(state, diag, step, time.perf_counter() - t0, pipe.mean_alerts, dt_fixed if fixed else dt0)
