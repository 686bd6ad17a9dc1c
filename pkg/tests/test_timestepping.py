import math

import numpy as np
import pytest

from cutdg.errors import BoundViolation, ColdHistory, ConfigError
from cutdg.harness import RunConfig, setup_run
from cutdg.operator import DgState, Rate
from cutdg.timestepping import (
    MS3_WEIGHTS,
    RK3_STAGES,
    MultistepHistory,
    StepperConfig,
    compute_dt,
    integrate,
    ssp_ms3_step,
    ssp_rk3_step,
    warmup_substeps,
)


class LinearPipe:
    """Stand-in pipeline with L(u) = k u and an identity post-processor."""

    def __init__(self, k):
        self.k = k

    def rate(self, s):
        return Rate(self.k * s.coeffs, np.zeros(1))

    def finish(self, s):
        return s


def state(v=1.0):
    return DgState(np.full((1, 1, 1), v), 0.0, np.zeros(1))


@pytest.mark.parametrize("args, expected", [((0, 0.2, 0.05, 2.0), 0.005), ((2, 0.2, 0.05, 2.0), 0.2 * 0.05 / 6 / 2),
                                            ((1, 1.0, 0.1, 1.0), 0.05)])
def test_compute_dt(args, expected):
    assert compute_dt(*args) == pytest.approx(expected, rel=1e-14)


def test_compute_dt_accuracy_law():
    assert compute_dt(3, 0.2, 0.01, 1.0, exponent=4 / 3) == pytest.approx(compute_dt(3, 0.2, 0.01, 1.0) * 0.01 ** (1 / 3))


def test_compute_dt_rejects_zero_speed():
    with pytest.raises(ValueError):
        compute_dt(1, 0.2, 0.1, 0.0)


def test_stage_coefficients_convex():
    for a, b in RK3_STAGES:
        assert a >= 0 and b > 0 and a + b == pytest.approx(1.0)
    assert MS3_WEIGHTS[0] + MS3_WEIGHTS[2] == pytest.approx(1.0, abs=1e-16)


def test_rk3_zero_operator_identity():
    s = state(0.7)
    out = ssp_rk3_step(s, 0.1, LinearPipe(0.0))
    assert out.coeffs[0, 0, 0] == 0.7
    assert out.t == pytest.approx(0.1)


@pytest.mark.parametrize("z", [0.01, 0.1, 0.5, 1.0])
def test_rk3_stability_polynomial(z):
    out = ssp_rk3_step(state(), z, LinearPipe(-1.0))
    assert out.coeffs[0, 0, 0] == pytest.approx(1 - z + z**2 / 2 - z**3 / 6, abs=1e-15)


def test_ms3_cold_history():
    h = MultistepHistory()
    h.push(state())
    with pytest.raises(ColdHistory):
        ssp_ms3_step(h, 0.1, LinearPipe(-1.0))


def test_ms3_linear_update():
    dt = 0.05
    h = MultistepHistory()
    vals = [math.exp(-k * dt) for k in range(4)]
    for v in vals:
        h.push(state(v))
    a, b, c, d = MS3_WEIGHTS
    out = ssp_ms3_step(h, dt, LinearPipe(-1.0))
    ref = a * (vals[3] - b * dt * vals[3]) + c * (vals[0] - d * dt * vals[0])
    assert out.coeffs[0, 0, 0] == pytest.approx(ref, abs=1e-15)
    # third-order local error on the exact exponential
    assert abs(out.coeffs[0, 0, 0] - math.exp(-4 * dt)) < 5 * dt**4


@pytest.mark.parametrize("h, n", [(1.0, 1), (0.125, 2), (1 / 27, 3), (0.01, 5), (1 / 640, 9)])
def test_warmup_substeps(h, n):
    assert warmup_substeps(h) == n


def test_stepper_config_validation():
    with pytest.raises(ConfigError):
        StepperConfig(integrator="euler")
    with pytest.raises(ConfigError):
        StepperConfig(dt_law="fixed")
    assert StepperConfig().monitoring and not StepperConfig(dt_law="fixed", dt_coeff=0.1).monitoring


def _integrate(problem, t_end, stepper=None, **kw):
    s = setup_run(RunConfig(problem, **kw))
    return s, integrate(s.op, s.problem, s.post, stepper or s.stepper, t_end)


def test_t_end_zero_returns_projection():
    s, res = _integrate("advection_smooth", 0.0, n=20, p=2)
    ref = s.post(s.op.l2_project(s.problem.initial, 1))
    np.testing.assert_array_equal(res.state.coeffs, ref.coeffs)
    assert res.steps == 0


@pytest.mark.parametrize("integrator", ["ssp_rk3", "ssp_ms3"])
def test_constant_state_unchanged(integrator):
    s = setup_run(RunConfig("advection_smooth", n=20, p=2, integrator=integrator))
    c = np.zeros((s.cx.n_active, 1, 3))
    c[:, 0, 0] = 1.2
    res = integrate(s.op, s.problem, s.post, s.stepper, 0.1, DgState(c, 0.0, np.zeros(1)))
    np.testing.assert_allclose(res.state.coeffs, c, atol=1e-13)


@pytest.mark.parametrize("integrator", ["ssp_rk3", "ssp_ms3"])
def test_final_time_landing(integrator):
    _, res = _integrate("burgers_smooth", 0.137, n=20, p=1, integrator=integrator)
    assert abs(res.state.t - 0.137) <= 1e-14 * 0.137


def test_rk3_third_order_in_time():
    # unlimited scheme: the bound limiter clips extrema differently at each dt
    def final(c):
        _, r = _integrate("advection_smooth", 0.2, StepperConfig(dt_law="fixed", dt_coeff=c), n=20, p=3,
                          bound_limiter=False)
        return r.state.coeffs

    ref = final(0.003125)
    errs = [np.abs(final(c) - ref).max() for c in (0.1, 0.05)]
    assert errs[0] / errs[1] == pytest.approx(8.0, rel=0.2)


def test_monitor_trips_on_large_step():
    s = setup_run(RunConfig("advection_nonsmooth", n=40, p=1, cfl=5.0))
    with pytest.raises(BoundViolation):
        integrate(s.op, s.problem, s.post, s.stepper, 0.5)


def test_diagnostics_columns():
    _, res = _integrate("advection_nonsmooth", 0.05, n=20, p=1)
    d = res.diagnostics.as_arrays()
    assert res.diagnostics.columns == ("t", "dt", "mass", "min", "max")
    assert len(d["t"]) == res.steps + 1
    assert d["lo"].min() >= -1e-12 and d["hi"].max() <= 1 + 1e-12
