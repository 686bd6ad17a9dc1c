"""Run configuration, experiment drivers, error norms and file output."""
from __future__ import annotations

import configparser
import dataclasses
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basis import gauss_legendre
from .errors import ConfigError, NoReference
from .limiters import LimiterConfig, PostProcessor, pressure_from
from .mesh import (
    MeshComplex,
    build_background_mesh,
    build_unfitted_boundary_mesh,
    generate_interfaces,
    interfaces_at,
    no_interfaces,
)
from .operator import SemiDiscreteOperator, assemble
from .problems import PROBLEM_NAMES, ProblemSpec, get_problem
from .timestepping import IntegrationResult, StepperConfig, integrate

log = logging.getLogger(__name__)

OUTPUT_ENV = "CUTDG_OUTPUT_DIR"
SAMPLES_PER_ELEMENT = 8

# section -> field names
SECTIONS = {
    "problem": ("problem", "t_end", "u_left", "u_right", "x_gamma", "eps"),
    "mesh": ("n", "alpha", "cut_region", "delta", "seed"),
    "scheme": ("p", "gamma0", "gamma1", "omega"),
    "time": ("integrator", "cfl", "dt_law", "dt_coeff", "exponent", "lambda_refresh", "monitor"),
    "limiter": ("reconstruction", "bound_limiter", "tvb", "tvb_m"),
    "output": ("output_dir", "prefix"),
}


@dataclass
class RunConfig:
    problem: str = "advection_smooth"
    t_end: float | None = None  # None: problem default
    u_left: float = -1.0
    u_right: float = 1.0
    x_gamma: float = 2e-5
    eps: float | None = None
    n: int = 40
    alpha: float | None = None  # None: problem default
    cut_region: tuple | None | str = "default"  # "default", None (no cuts) or (a, b)
    delta: float = 0.2
    seed: int = 0
    p: int = 2
    gamma0: float = 0.25
    gamma1: float = 0.75
    omega: str = "scaled"
    integrator: str = "ssp_rk3"
    cfl: float = 1.0
    dt_law: str = "cfl"
    dt_coeff: float = 0.0
    exponent: float = 1.0
    lambda_refresh: str = "step"
    monitor: bool | None = None
    reconstruction: str = "all"
    bound_limiter: bool = True
    tvb: bool = False
    tvb_m: float = 0.0
    output_dir: str = "output"
    prefix: str = "run"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.problem not in PROBLEM_NAMES:
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.p not in (0, 1, 2, 3):
            raise ConfigError("p must be 0, 1, 2 or 3")
        if self.n < 4:
            raise ConfigError("n must be at least 4")
        if self.alpha is not None and not 0.0 < self.alpha <= 1.0:
            raise ConfigError("alpha must lie in (0, 1]")
        if not 0.0 < self.delta <= 1.0:
            raise ConfigError("delta must lie in (0, 1]")
        if self.gamma0 <= 0 or self.gamma1 <= 0:
            raise ConfigError("gamma0 and gamma1 must be positive")
        if self.omega not in ("scaled", "factorial"):
            raise ConfigError("omega must be 'scaled' or 'factorial'")
        if self.reconstruction not in ("all", "on_violation", "off"):
            raise ConfigError("reconstruction must be all, on_violation or off")
        if self.t_end is not None and self.t_end < 0:
            raise ConfigError("t_end must be nonnegative")
        StepperConfig(
            self.integrator, self.cfl, self.dt_law, self.dt_coeff or 1.0, self.exponent, self.lambda_refresh
        )

    # -- serialization ---------------------------------------------------------------
    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        for sec, keys in SECTIONS.items():
            cp[sec] = {k: _fmt(getattr(self, k)) for k in keys}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str, source: str = "<config>") -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        try:
            cp.read_string(text, source=source)
        except configparser.Error as exc:
            raise ConfigError(f"{source}: {exc}") from None
        types = {f.name: f for f in dataclasses.fields(cls)}
        kw = {}
        for sec in cp.sections():
            if sec not in SECTIONS:
                raise ConfigError(f"{source}: unknown section [{sec}]")
            for key, raw in cp[sec].items():
                if key not in SECTIONS[sec]:
                    raise ConfigError(f"{source}: unknown key {key!r} in section [{sec}]")
                try:
                    kw[key] = _parse(key, raw, types[key])
                except ValueError as exc:
                    raise ConfigError(f"{source}: [{sec}] {key} = {raw!r}: {exc}") from None
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_ini(text, str(path))

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ",".join(repr(float(x)) for x in v)
    return str(v)


def _parse(key: str, raw: str, f: dataclasses.Field):
    raw = raw.strip()
    low = raw.lower()
    if key == "cut_region":
        if low == "default":
            return "default"
        if low == "none":
            return None
        parts = [float(x) for x in raw.split(",")]
        if len(parts) != 2 or not parts[0] < parts[1]:
            raise ValueError("expected 'a,b' with a < b")
        return tuple(parts)
    if low == "none":
        if "None" not in str(f.type):
            raise ValueError("value may not be none")
        return None
    t = str(f.type)
    if t.startswith("bool"):
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError("expected a boolean")
    if t.startswith("int"):
        return int(raw)
    if t.startswith("float"):
        return float(raw)
    return raw


# -- building a run ---------------------------------------------------------------------
@dataclass
class Setup:
    config: RunConfig
    problem: ProblemSpec
    cx: MeshComplex
    op: SemiDiscreteOperator
    post: PostProcessor
    stepper: StepperConfig
    t_end: float


def build_problem(cfg: RunConfig) -> ProblemSpec:
    return get_problem(
        cfg.problem, n=cfg.n, uL=cfg.u_left, uR=cfg.u_right, x_gamma=cfg.x_gamma, eps=cfg.eps, t_end=cfg.t_end
    )


def build_mesh(cfg: RunConfig, problem: ProblemSpec) -> MeshComplex:
    alpha = problem.alpha if cfg.alpha is None else cfg.alpha
    if problem.unfitted:
        mesh, ifaces = build_unfitted_boundary_mesh(*problem.domain, cfg.n, alpha)
    else:
        mesh = build_background_mesh(*problem.domain, cfg.n)
        region = problem.cut_region if cfg.cut_region == "default" else cfg.cut_region
        if problem.interfaces:
            ifaces = interfaces_at(mesh, problem.interfaces)
        elif region is None or alpha >= 1.0:
            ifaces = no_interfaces(mesh)
        else:
            ifaces = generate_interfaces(mesh, region, alpha, cfg.seed)
    return MeshComplex(mesh, ifaces, cfg.delta)


def setup_run(cfg: RunConfig) -> Setup:
    problem = build_problem(cfg)
    cx = build_mesh(cfg, problem)
    nq = 2 * (cfg.p + 2) if problem.nonlinear else cfg.p + 2
    op = assemble(cx, cfg.p, cfg.gamma0, cfg.gamma1, problem.nvar, cfg.omega, nq)
    stepper = StepperConfig(
        cfg.integrator, cfg.cfl, cfg.dt_law, cfg.dt_coeff, cfg.exponent, cfg.lambda_refresh, cfg.monitor
    )
    lim = LimiterConfig(cfg.reconstruction, cfg.bound_limiter, cfg.tvb, cfg.tvb_m, strict=stepper.monitoring)
    post = PostProcessor(op, problem, lim)
    t_end = problem.t_end if cfg.t_end is None else cfg.t_end
    return Setup(cfg, problem, cx, op, post, stepper, t_end)


# -- errors -----------------------------------------------------------------------------
@dataclass
class ErrorReport:
    n: int
    h: float
    l1: float
    l2: float
    linf: float
    variable: int = 0

    def as_dict(self):
        return dataclasses.asdict(self)


def compute_errors(op: SemiDiscreteOperator, state, reference, variable: int = 0, points: int | None = None) -> ErrorReport:
    """L1, L2 and Linf errors of one variable over the physical domain.

    `reference(x)` returns (nvar, len(x)).  Quadrature runs over every
    intersection K; Linf uses the quadrature nodes and the ends of each K.
    """
    if reference is None:
        raise NoReference("no reference solution")
    cx = op.cx
    rule = gauss_legendre(points or op.P + 3)
    x, w = rule.mapped(cx.elem_a, cx.elem_b)  # (ne, nq)
    xi = (x - cx.elem_left[:, None]) / op.h
    uh = np.einsum("eqk,ek->eq", op.basis.eval(xi), state.coeffs[:, variable])
    ref = np.asarray(reference(x.ravel()))[variable].reshape(x.shape)
    err = uh - ref
    ends = np.stack((cx.elem_a, cx.elem_b), axis=1)
    xe = (ends - cx.elem_left[:, None]) / op.h
    ue = np.einsum("eqk,ek->eq", op.basis.eval(xe), state.coeffs[:, variable])
    re = np.asarray(reference(ends.ravel()))[variable].reshape(ends.shape)
    linf = max(float(np.max(np.abs(err))), float(np.max(np.abs(ue - re))))
    return ErrorReport(
        cx.mesh.n_elements,
        op.h,
        float(np.sum(w * np.abs(err))),
        float(np.sqrt(np.sum(w * err * err))),
        linf,
        variable,
    )


# -- output -----------------------------------------------------------------------------
def sample_points(cx: MeshComplex) -> np.ndarray:
    mesh = cx.mesh
    k = (np.arange(SAMPLES_PER_ELEMENT) + 0.5) / SAMPLES_PER_ELEMENT
    x = (mesh.edges[:-1, None] + mesh.h * k).ravel()
    return x[(x >= mesh.physical_left) & (x <= mesh.physical_right)]


def solution_table(op: SemiDiscreteOperator, state, problem: ProblemSpec):
    x = sample_points(op.cx)
    vals = op.evaluate(state.coeffs, x)
    if problem.kind == "euler":
        rho, m, E = vals
        cols = ("x", "rho", "velocity", "pressure")
        data = np.column_stack((x, rho, m / rho, pressure_from(rho, m, E, problem.admissible.gamma)))
    else:
        cols = ("x", "u")
        data = np.column_stack((x, vals[0]))
    return cols, data


def write_csv(path: Path, cols, data):
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(cols), comments="")


def output_dir(cfg: RunConfig) -> Path:
    return Path(os.environ.get(OUTPUT_ENV) or cfg.output_dir)


@dataclass
class RunReport:
    config: RunConfig
    result: IntegrationResult
    setup: Setup
    errors: ErrorReport | None
    files: dict = field(default_factory=dict)

    @property
    def state(self):
        return self.result.state

    @property
    def diagnostics(self):
        return self.result.diagnostics.as_arrays()

    def summary(self) -> dict:
        d = self.result.diagnostics.as_arrays()
        net = d["net"]
        out = {
            "problem": self.config.problem,
            "n": self.config.n,
            "p": self.config.p,
            "t_final": float(self.result.state.t),
            "steps": self.result.steps,
            "wall_time": self.result.wall_time,
            "mean_alerts": self.result.mean_alerts,
            "mass_drift": float(np.max(np.abs(net - net[0]))),
            "min": float(np.min(d["lo"])),
            "max": float(np.max(d["hi"])) if self.setup.problem.kind != "euler" else None,
        }
        if self.setup.problem.kind == "euler":
            out = {**out, "min_rho": out.pop("min"), "min_p": float(np.min(d["hi"]))}
            out.pop("max")
        if self.errors is not None:
            out["errors"] = self.errors.as_dict()
        return out


def run(cfg: RunConfig, write: bool = True, reference=None) -> RunReport:
    """Execute one configured run; writes solution, diagnostics and report files."""
    s = setup_run(cfg)
    result = integrate(s.op, s.problem, s.post, s.stepper, s.t_end)
    errors = None
    ref = reference
    if ref is None and s.problem.exact is not None:
        t = result.state.t

        def ref(x):
            return s.problem.exact_solution(x, t)

    if ref is not None:
        try:
            errors = compute_errors(s.op, result.state, ref)
        except NoReference:
            errors = None
    report = RunReport(cfg, result, s, errors)
    if write:
        out = output_dir(cfg)
        cols, data = solution_table(s.op, result.state, s.problem)
        sol = out / f"{cfg.prefix}_solution.csv"
        write_csv(sol, cols, data)
        d = result.diagnostics
        arr = d.as_arrays()
        dg = out / f"{cfg.prefix}_diagnostics.csv"
        write_csv(dg, d.columns, np.column_stack((arr["t"], arr["dt"], arr["mass"], arr["lo"], arr["hi"])))
        rep = out / f"{cfg.prefix}_report.json"
        summary = {k: v for k, v in report.summary().items() if k != "wall_time"}
        rep.write_text(json.dumps(summary, indent=2, sort_keys=True))
        (out / f"{cfg.prefix}_config.ini").write_text(cfg.to_ini())
        report.files = {"solution": sol, "diagnostics": dg, "report": rep}
    return report


def level_seeds(seed: int, count: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


def eoc(errors) -> list:
    e = np.asarray(errors, dtype=float)
    return [None] + [float(np.log2(a / b)) for a, b in zip(e[:-1], e[1:])]


def _level_row(c: RunConfig, write: bool) -> dict:
    rep = run(c, write=write)
    if rep.errors is None:
        raise NoReference(f"problem {c.problem} has no reference for error norms")
    return {"n": c.n, "l2": rep.errors.l2, "linf": rep.errors.linf, "l1": rep.errors.l1,
            "wall_time": rep.result.wall_time, "steps": rep.result.steps}


def convergence_sweep(cfg: RunConfig, levels, write: bool = False, variable: int = 0, jobs: int = 1):
    """Errors and EOC over mesh levels, one derived seed per level.

    With jobs > 1 the levels run in separate processes; each level writes its
    own files, so results do not depend on the job count.
    """
    levels = list(levels)
    if len(levels) < 3:
        raise ConfigError("a convergence sweep needs at least three levels")
    cfgs = [cfg.replace(n=n, seed=seed, prefix=f"{cfg.prefix}_N{n}")
            for n, seed in zip(levels, level_seeds(cfg.seed, len(levels)))]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(cfgs))) as pool:
            rows = list(pool.map(_level_row, cfgs, [write] * len(cfgs)))
    else:
        rows = [_level_row(c, write) for c in cfgs]
    for key in ("l2", "linf", "l1"):
        for r, o in zip(rows, eoc([r[key] for r in rows])):
            r[f"eoc_{key}"] = o
    return rows


def format_table(rows) -> str:
    lines = ["N,L2,EOC_L2,Linf,EOC_Linf,steps,seconds"]
    for r in rows:
        e2 = "" if r["eoc_l2"] is None else f"{r['eoc_l2']:.3f}"
        ei = "" if r["eoc_linf"] is None else f"{r['eoc_linf']:.3f}"
        lines.append(f"{r['n']},{r['l2']:.6e},{e2},{r['linf']:.6e},{ei},{r['steps']},{r['wall_time']:.2f}")
    return "\n".join(lines)


# -- canned configurations ----------------------------------------------------------------
def figure_configs(fig: str) -> list[RunConfig]:
    """Configurations reproducing each figure-level experiment."""
    f = FIGURE_ALIASES.get(fig, fig)
    if f == "fig4":
        return [
            RunConfig("advection_smooth", n=80, p=2, integrator="ssp_ms3", dt_law="fixed", dt_coeff=1 / 24, prefix="fig4_p2"),
            RunConfig("advection_smooth", n=80, p=3, integrator="ssp_ms3", dt_law="fixed", dt_coeff=1 / 15,
                      exponent=4 / 3, prefix="fig4_p3"),
        ]
    if f == "burgers-accuracy":
        return [
            RunConfig("burgers_smooth", n=80, p=2, integrator="ssp_ms3", dt_law="fixed", dt_coeff=1 / 24,
                      prefix="burgers_accuracy_p2"),
            RunConfig("burgers_smooth", n=80, p=3, integrator="ssp_ms3", dt_law="fixed", dt_coeff=1 / 15,
                      exponent=4 / 3, prefix="burgers_accuracy_p3"),
        ]
    if f == "fig5":
        out = []
        for p in (1, 2):
            # controls without reconstruction: means may leave [0, 1], so the mean monitor is off
            out.append(RunConfig("advection_nonsmooth", n=100, p=p, reconstruction="off", bound_limiter=False,
                                 monitor=False, prefix=f"fig5_p{p}_plain"))
            out.append(RunConfig("advection_nonsmooth", n=100, p=p, reconstruction="off", monitor=False,
                                 prefix=f"fig5_p{p}_elementwise"))
            out.append(RunConfig("advection_nonsmooth", n=100, p=p, prefix=f"fig5_p{p}_macro"))
        return out
    if f == "fig6":
        return [
            RunConfig("burgers_smooth", n=n, p=3, t_end=0.5, reconstruction=mode, bound_limiter=True,
                      monitor=False if mode == "off" else None, prefix=f"fig6_N{n}_{mode}")
            for n in (40, 640) for mode in ("off", "all", "on_violation")
        ]
    if f == "fig7":
        return [
            RunConfig("burgers_riemann", n=100, p=p, u_left=uL, u_right=uR, prefix=f"fig7_{tag}_p{p}")
            for p in (1, 2, 3) for uL, uR, tag in ((-1.0, 1.0, "rarefaction"), (1.0, -0.5, "shock"))
        ]
    if f == "fig8":
        return [RunConfig("discontinuous_flux", n=40, p=2, t_end=t, prefix=f"fig8_t{t}") for t in (0.3, 0.6, 0.9)]
    if f == "fig9":
        return [RunConfig("low_density", n=40, p=p, exponent=4 / 3 if p == 3 else 1.0, prefix=f"fig9_p{p}")
                for p in (1, 2, 3)]
    if f == "fig10":
        return [
            RunConfig("sedov", n=200, p=2, tvb=True, reconstruction=mode, prefix=f"fig10_{mode}")
            for mode in ("all", "on_violation")
        ]
    if f == "fig11":
        return [RunConfig("sod", n=100, p=p, tvb=True, prefix=f"fig11_p{p}") for p in (2, 3)]
    if f == "fig12":
        return [RunConfig("double_rarefaction", n=100, p=p, prefix=f"fig12_p{p}") for p in (2, 3)]
    if f in ("fig13", "appendix-two-blast"):
        return [RunConfig("two_blast", n=200, p=p, tvb=True, prefix=f"{f}_p{p}") for p in (1, 2, 3)]
    if f == "appendix-inflow":
        return [RunConfig("advection_inflow", n=100, p=p, prefix=f"appendix_inflow_p{p}") for p in (1, 2, 3)]
    raise ConfigError(f"unknown figure id {fig!r}; known: {', '.join(sorted(FIGURES))}")


FIGURES = ("fig4", "burgers-accuracy", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12", "fig13",
           "appendix-inflow", "appendix-two-blast")
FIGURE_ALIASES = {
    "accuracy": "fig4", "nonsmooth": "fig5", "burgers-shock": "fig6", "burgers-riemann": "fig7",
    "discontinuous-flux": "fig8", "low-density": "fig9", "sedov": "fig10", "sod": "fig11",
    "double-rarefaction": "fig12", "two-blast": "fig13",
}
# accuracy figures are reproduced as convergence sweeps over these levels
SWEEP_LEVELS = {
    "fig4": (20, 40, 80, 160, 320, 640),
    "burgers-accuracy": (20, 40, 80, 160, 320, 640),
    "fig9": (20, 40, 80, 160),
}


def fine_reference(cfg: RunConfig, n_ref: int = 3200):
    """Reference from a fine uncut run (P2); returns a callable x -> (nvar, len(x))."""
    c = cfg.replace(n=n_ref, p=2, cut_region=None, alpha=1.0, prefix=f"{cfg.prefix}_reference")
    rep = run(c, write=False)
    op, st = rep.setup.op, rep.state
    return lambda x: op.evaluate(st.coeffs, x)
