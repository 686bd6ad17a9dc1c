import json

import numpy as np
import pytest

from cutdg.cli import EXIT_CONFIG, EXIT_INVARIANT, EXIT_OK, main
from cutdg.errors import ConfigError, NoReference
from cutdg.harness import (
    FIGURE_ALIASES,
    FIGURES,
    OUTPUT_ENV,
    RunConfig,
    compute_errors,
    convergence_sweep,
    eoc,
    figure_configs,
    level_seeds,
    run,
    setup_run,
)
from cutdg.mesh import MeshComplex, build_background_mesh, no_interfaces
from cutdg.operator import DgState, assemble

from conftest import cut_complex


@pytest.fixture
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path))
    return tmp_path


def test_ini_round_trip():
    cfg = RunConfig("sod", n=37, p=2, alpha=0.03, tvb=True, tvb_m=10.0, seed=9, integrator="ssp_ms3")
    assert RunConfig.from_ini(cfg.to_ini()) == cfg


def test_ini_unknown_key():
    with pytest.raises(ConfigError, match="unknown key 'foo'"):
        RunConfig.from_ini("[problem]\nproblem = sod\nfoo = 1\n")


@pytest.mark.parametrize("kw", [dict(p=4), dict(n=2), dict(delta=0.0), dict(reconstruction="none"),
                                dict(problem="nope"), dict(integrator="rk4")])
def test_config_rejects(kw):
    with pytest.raises(ConfigError):
        RunConfig(**{"problem": "sod", **kw})


def _zero_state(op):
    return DgState(np.zeros((op.cx.n_active, 1, op.P)))


def test_error_norms_example():
    op = assemble(cut_complex(20), 2)
    e = compute_errors(op, _zero_state(op), lambda x: np.ones((1, len(x))))
    assert e.l1 == pytest.approx(2.0, abs=1e-13)
    assert e.l2 == pytest.approx(np.sqrt(2.0), abs=1e-13)
    assert e.linf == 1.0


def test_error_norms_ignore_padding():
    # norms integrate over physical intersections only; cut and uncut meshes agree
    def ref(x):
        return (x * x + 1.0)[None]

    m = build_background_mesh(0.0, 2.0, 20)
    uncut = assemble(MeshComplex(m, no_interfaces(m)), 1)
    a = compute_errors(uncut, _zero_state(uncut), ref)
    op = assemble(cut_complex(20, 0.05), 1)
    b = compute_errors(op, _zero_state(op), ref)
    assert b.l2 == pytest.approx(a.l2, rel=1e-12)
    assert b.l1 == pytest.approx(a.l1, rel=1e-12)


def test_error_norms_need_reference(cx):
    op = assemble(cx, 1)
    with pytest.raises(NoReference):
        compute_errors(op, _zero_state(op), None)


def test_eoc():
    assert eoc([1.0, 0.125, 0.015625]) == [None, 3.0, 3.0]


def test_level_seeds_deterministic():
    assert level_seeds(3, 4) == level_seeds(3, 4)
    assert len(set(level_seeds(3, 4))) == 4


def test_sweep_needs_three_levels():
    with pytest.raises(ConfigError):
        convergence_sweep(RunConfig("advection_smooth"), [10, 20])


def test_sweep_jobs_independent():
    cfg = RunConfig("advection_smooth", p=1, t_end=0.1)
    a = convergence_sweep(cfg, [10, 20, 40])
    b = convergence_sweep(cfg, [10, 20, 40], jobs=2)
    assert [r["l2"] for r in a] == [r["l2"] for r in b]
    assert b[-1]["eoc_l2"] > 1.5


def test_run_writes_files(outdir):
    rep = run(RunConfig("advection_nonsmooth", n=20, p=1, t_end=0.05, prefix="t"))
    for name in ("t_solution.csv", "t_diagnostics.csv", "t_report.json", "t_config.ini"):
        assert (outdir / name).exists()
    summary = json.loads((outdir / "t_report.json").read_text())
    assert "wall_time" not in summary and summary["n"] == 20
    assert RunConfig.load(outdir / "t_config.ini") == rep.config


def test_run_bitwise_deterministic(tmp_path, monkeypatch):
    cfg = RunConfig("burgers_smooth", n=30, p=2, t_end=0.1, seed=5, prefix="d")
    blobs = []
    for sub in ("a", "b"):
        monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / sub))
        run(cfg)
        blobs.append([(tmp_path / sub / f"d_{k}.csv").read_bytes() for k in ("solution", "diagnostics")])
    assert blobs[0] == blobs[1]


def test_euler_summary_keys():
    s = run(RunConfig("sod", n=20, p=1, t_end=0.01), write=False).summary()
    assert {"min_rho", "min_p"} <= set(s) and "max" not in s


@pytest.mark.parametrize("fig", FIGURES + tuple(FIGURE_ALIASES))
def test_figure_configs_valid(fig):
    cfgs = figure_configs(FIGURE_ALIASES.get(fig, fig))
    assert cfgs
    for c in cfgs:
        setup_run(c.replace(n=8)) if c.problem != "two_blast" else c.validate()


def _ini(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_cli_run_ok(outdir, capsys):
    path = _ini(outdir, RunConfig("advection_smooth", n=10, p=1, t_end=0.05, prefix="cli").to_ini())
    assert main(["run", path]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["n"] == 10


def test_cli_config_error(outdir, capsys):
    path = _ini(outdir, "[problem]\nproblem = sod\nfoo = 1\n")
    assert main(["run", path]) == EXIT_CONFIG
    assert "unknown key 'foo'" in capsys.readouterr().err


def test_cli_missing_file(outdir):
    assert main(["run", str(outdir / "missing.ini")]) == EXIT_CONFIG


def test_cli_invariant_violation(outdir):
    path = _ini(outdir, RunConfig("advection_nonsmooth", n=40, p=1, cfl=5.0, t_end=0.5).to_ini())
    assert main(["run", path]) == EXIT_INVARIANT


def test_cli_verify_json(capsys):
    assert main(["verify", "quadrature", "--quick", "--json"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data and all(d["passed"] for d in data)


def test_cli_verify_unknown_suite():
    assert main(["verify", "nope"]) == EXIT_CONFIG


def test_cli_converge(outdir, capsys):
    path = _ini(outdir, RunConfig("advection_smooth", p=1, t_end=0.1, prefix="cv").to_ini())
    assert main(["converge", path, "--levels", "10,20,40"]) == EXIT_OK
    assert (outdir / "cv_convergence.csv").exists()


def test_cli_reproduce_levels(outdir, capsys):
    assert main(["reproduce", "fig4", "--levels", "8,16,32", "--output", str(outdir)]) == EXIT_OK
    assert "EOC_L2" in capsys.readouterr().out


def test_cli_bad_levels():
    with pytest.raises(SystemExit):
        main(["converge", "x.ini", "--levels", "a,b"])
