"""End-to-end acceptance checks, one pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` or directly as a script.
"""
import numpy as np
import pytest

from cutdg.harness import RunConfig, convergence_sweep, run, setup_run
from cutdg.verification import SUITES, verify

from conftest import record_criterion

FULL_LEVELS = (20, 40, 80, 160, 320, 640)
BOUND_TOL = 1e-12


def sweep(cfg, levels):
    rows = convergence_sweep(cfg, levels)
    return rows, rows[-1]["eoc_l2"]


def table(rows):
    return " ".join(f"N={r['n']}:{r['l2']:.2e}" for r in rows)


def accuracy_cfg(problem, p, integrator="ssp_ms3", **kw):
    if p == 3:
        kw = {"dt_law": "fixed", "dt_coeff": 1 / 15, "exponent": 4 / 3, **kw}
    else:
        kw = {"dt_law": "fixed", "dt_coeff": 1 / 24, **kw}
    return RunConfig(problem, p=p, integrator=integrator, alpha=0.1, delta=0.2, prefix=f"acc_{problem}_p{p}", **kw)


@pytest.mark.parametrize("p", [2, 3])
def test_1_advection_ms3_convergence(p):
    rows, rate = sweep(accuracy_cfg("advection_smooth", p), FULL_LEVELS)
    ok = rate >= p + 1 - 0.25
    secs = sum(r["wall_time"] for r in rows)
    record_criterion(f"1.p{p}", ok, f"advection ms3 p={p} EOC(L2)={rate:.3f} need>={p + 0.75} [{secs:.1f}s] {table(rows)}")
    assert ok


def test_2_rk3_limiter_degeneracy():
    cfg = RunConfig("advection_smooth", p=3, integrator="ssp_rk3", alpha=0.1, dt_law="fixed",
                    dt_coeff=0.5 * 0.9 / 6, exponent=4 / 3, prefix="acc_rk3_p3")
    rows, rate = sweep(cfg, FULL_LEVELS)
    ok = rate < 3.5
    record_criterion("2", ok, f"rk3+limiter p=3 EOC(L2)={rate:.3f} need<3.5 {table(rows)}")
    assert ok


def bounds_of(rep):
    d = rep.diagnostics
    return float(d["lo"].min()), float(d["hi"].max())


@pytest.mark.parametrize("p", [1, 2])
def test_3_maximum_principle_nonsmooth(p):
    lo, hi = bounds_of(run(RunConfig("advection_nonsmooth", n=100, p=p, t_end=1.0), write=False))
    # negative control: unlimited means may leave [0, 1], so the mean monitor is off
    plain = run(RunConfig("advection_nonsmooth", n=100, p=p, t_end=1.0, reconstruction="off",
                          bound_limiter=False, monitor=False), write=False)
    plo, phi = bounds_of(plain)
    over = max(-plo, phi - 1.0)
    ok = lo >= -BOUND_TOL and hi <= 1 + BOUND_TOL and over > 1e-2
    record_criterion(f"3.p{p}", ok, f"limited range [{lo:.3e}, {hi:.15g}]; unlimited overshoot {over:.3e}")
    assert lo >= -BOUND_TOL and hi <= 1 + BOUND_TOL
    assert over > 1e-2


@pytest.mark.parametrize("p", [2, 3])
def test_4_burgers_smooth_convergence(p):
    rows, rate = sweep(accuracy_cfg("burgers_smooth", p), FULL_LEVELS)
    ok = rate >= p + 1 - 0.25
    record_criterion(f"4.smooth_p{p}", ok, f"burgers smooth ms3 p={p} EOC(L2)={rate:.3f} need>={p + 0.75} {table(rows)}")
    assert ok


@pytest.mark.parametrize("p", [1, 2, 3])
@pytest.mark.parametrize("uL, uR", [(-1.0, 1.0), (1.0, -0.5)])
def test_4_burgers_riemann_hull(p, uL, uR):
    lo, hi = bounds_of(run(RunConfig("burgers_riemann", n=100, p=p, u_left=uL, u_right=uR), write=False))
    a, b = min(uL, uR), max(uL, uR)
    ok = lo >= a - BOUND_TOL and hi <= b + BOUND_TOL
    record_criterion(f"4.riemann_{uL:+g}_{uR:+g}_p{p}", ok, f"range [{lo:.15g}, {hi:.15g}] hull [{a}, {b}]")
    assert ok


def test_4_post_shock_on_violation():
    lo, hi = bounds_of(run(RunConfig("burgers_smooth", n=40, p=3, t_end=0.5, reconstruction="on_violation"),
                           write=False))
    ok = lo >= -1 - BOUND_TOL and hi <= 1 + BOUND_TOL
    record_criterion("4.on_violation", ok, f"post-shock range [{lo:.15g}, {hi:.15g}]")
    assert ok


def test_5_discontinuous_flux():
    rep = run(RunConfig("discontinuous_flux", n=40, p=2, t_end=0.9), write=False)
    d = rep.diagnostics
    net = d["net"][:, 0]
    drift = float(np.abs(net - net[0]).max())
    lo, hi = bounds_of(rep)
    ok = drift <= 1e-10 and lo >= 0.5 - BOUND_TOL and hi <= 2 + BOUND_TOL and rep.state.t == 0.9
    record_criterion("5", ok, f"mass drift (net of boundary flux) {drift:.2e}; range [{lo:.15g}, {hi:.15g}]")
    assert ok


@pytest.mark.parametrize("p, levels", [(1, (20, 40, 80, 160)), (2, (20, 40, 80, 160)), (3, (20, 40, 80))])
def test_6_low_density_convergence(p, levels):
    cfg = RunConfig("low_density", p=p, exponent=4 / 3 if p == 3 else 1.0, prefix=f"acc_low_density_p{p}")
    rows = convergence_sweep(cfg, levels)
    rate = rows[-1]["eoc_l2"]
    min_rho = float(run(cfg.replace(n=levels[-1]), write=False).diagnostics["lo"].min())
    ok = rate >= p + 1 - 0.25 and min_rho > 0
    record_criterion(f"6.p{p}", ok, f"low density p={p} EOC(L2)={rate:.3f} min rho {min_rho:.3e} {table(rows)}")
    assert ok


ROBUST = {
    "sod": dict(tvb=True),
    "double_rarefaction": dict(),
    "sedov": dict(n=200, tvb=True),
    "two_blast": dict(n=200, tvb=True, alpha=0.01),
}


@pytest.mark.parametrize("problem", list(ROBUST))
def test_7_euler_positivity(problem):
    kw = {"n": 100, **ROBUST[problem]}
    cfg = RunConfig(problem, p=2, **kw)
    eps = setup_run(cfg).problem.admissible.eps
    rep = run(cfg, write=False)
    d = rep.diagnostics
    rho, pr = float(d["lo"].min()), float(d["hi"].min())
    floor = eps * (1 - 1e-9)
    ok = rho >= floor and pr >= floor and rep.state.t == pytest.approx(setup_run(cfg).t_end, rel=1e-14)
    record_criterion(f"7.{problem}", ok, f"min rho {rho:.3e} min p {pr:.3e} eps {eps:g} steps {rep.result.steps}")
    assert ok


@pytest.mark.parametrize("problem", ["sod", "double_rarefaction"])
def test_7_riemann_self_convergence(problem):
    errs = [run(RunConfig(problem, n=n, p=2, **ROBUST[problem]), write=False).errors.l1 for n in (50, 100, 200)]
    ok = errs[0] > errs[1] > errs[2]
    record_criterion(f"7.{problem}_L1", ok, "L1 density " + " > ".join(f"{e:.3e}" for e in errs))
    assert ok


def test_8_property_suites():
    results = verify("all", seed=0)
    names = {r.suite for r in results}
    failed = [r.line() for r in results if not r.passed]
    ok = not failed and names == set(SUITES)
    record_criterion("8", ok, f"{len(results)} checks in {len(names)} suites, failures: {failed or 'none'}")
    assert ok


def test_9_determinism(tmp_path, monkeypatch):
    cfg = RunConfig("burgers_riemann", n=60, p=2, u_left=1.0, u_right=-0.5, seed=11, prefix="det")
    blobs = []
    for sub in ("a", "b"):
        monkeypatch.setenv("CUTDG_OUTPUT_DIR", str(tmp_path / sub))
        rep = run(cfg)
        blobs.append({k: rep.files[k].read_bytes() for k in ("solution", "diagnostics", "report")})
    ok = blobs[0] == blobs[1]
    record_criterion("9", ok, "solution, diagnostics and report bytes identical across runs")
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
