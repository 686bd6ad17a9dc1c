import numpy as np
import pytest
from scipy.integrate import quad

from cutdg.errors import ConfigError, NoReference
from cutdg.problems import (
    PROBLEM_NAMES,
    BoundaryCondition,
    burgers_exact_smooth,
    get_problem,
    ghost_state,
    reference_solution,
    step_inflow,
)
from cutdg.riemann import ExactRiemannSolver
from cutdg.sedov import PlanarSedov


def test_wall_ghost_mirrors_velocity():
    np.testing.assert_array_equal(ghost_state(BoundaryCondition("solid_wall"), [1.0, 2.0, 5.0], 0.0), [1, -2, 5])


def test_outflow_ghost():
    assert ghost_state(BoundaryCondition("outflow"), [0.7], 0.0)[0] == 0.7


@pytest.mark.parametrize("t, g", [(0.0, 1.0), (0.5, 1.0), (0.5000001, 0.0), (2.0, 0.0)])
def test_inflow_switch(t, g):
    bc = BoundaryCondition("inflow", step_inflow)
    assert ghost_state(bc, [0.3], t)[0] == g


def test_bc_validation():
    with pytest.raises(ConfigError):
        BoundaryCondition("mirror")
    with pytest.raises(ConfigError):
        BoundaryCondition("inflow")


def test_advection_smooth_exact():
    p = get_problem("advection_smooth")
    assert reference_solution(p, np.array([0.5]), 1.0)[0, 0] == pytest.approx(0.5)


def test_advection_nonsmooth_initial_and_period():
    p = get_problem("advection_nonsmooth")
    x = np.array([0.3, 0.7])
    np.testing.assert_array_equal(p.initial(x)[0] if np.ndim(p.initial(x)) == 2 else p.initial(x), [1.0, 0.0])
    xs = np.linspace(0.01, 1.99, 37)
    np.testing.assert_allclose(p.exact_solution(xs, 2.0 if p.domain[1] - p.domain[0] == 2 else 1.0),
                               p.exact_solution(xs, 0.0), atol=1e-14)


def test_burgers_smooth_t0():
    x = np.linspace(0, 2, 11)
    np.testing.assert_array_equal(burgers_exact_smooth(x, 0.0), np.sin(np.pi * x))


def test_burgers_smooth_fixed_point():
    x = np.linspace(0, 2, 1001)
    u = burgers_exact_smooth(x, 0.3)
    assert np.abs(u - np.sin(np.pi * (x - 0.3 * u))).max() < 1e-13


def test_burgers_smooth_after_breaking():
    with pytest.raises(NoReference):
        burgers_exact_smooth(np.zeros(1), 0.5)


def test_burgers_rarefaction():
    p = get_problem("burgers_riemann", uL=-1.0, uR=1.0)
    x = np.linspace(-2, 2, 41)
    np.testing.assert_allclose(p.exact_solution(x, 0.5)[0], np.clip(x / 0.5, -1, 1), atol=1e-15)


def test_burgers_shock_speed():
    p = get_problem("burgers_riemann", uL=1.0, uR=-0.5)
    u = p.exact_solution(np.array([0.25 * 1.0 - 1e-9, 0.25 * 1.0 + 1e-9]), 1.0)[0]
    np.testing.assert_array_equal(u, [1.0, -0.5])


def test_discontinuous_flux_mass():
    p = get_problem("discontinuous_flux")
    m = quad(lambda x: float(np.atleast_1d(p.initial(np.array([x]))).ravel()[0]), -1, 1, points=[-0.5], limit=200)[0]
    assert m == pytest.approx(3.25, abs=1e-10)


def test_low_density_minimum():
    p = get_problem("low_density")
    x = np.linspace(0, 2 * np.pi, 2001)
    assert p.exact_solution(x, 0.0)[0].min() == pytest.approx(0.01, abs=1e-6)


def test_sod_left_sound_speed():
    s = get_problem("sod").params["solver"]
    assert s.cL == pytest.approx(np.sqrt(1.4))


def test_sedov_background_pressure():
    p = get_problem("sedov")
    u = p.initial(np.array([1.0]))
    assert 0.4 * u[2, 0] == pytest.approx(4e-13)


def test_sod_star_state():
    s = ExactRiemannSolver((1.0, 0.0, 1.0), (0.125, 0.0, 0.1), 1.4, 0.5)
    assert s.p_star == pytest.approx(0.30313, abs=1e-5)
    assert s.u_star == pytest.approx(0.92745, abs=1e-5)


def test_sod_t0_left_state():
    p = get_problem("sod")
    np.testing.assert_allclose(p.exact_solution(np.array([0.25]), 0.0)[:, 0], [1.0, 0.0, 2.5])


def test_sod_sampled_mass_conserved():
    p = get_problem("sod")
    x = np.linspace(0, 1, 200001)
    rho = p.exact_solution(x, 0.2)[0]
    mass = np.trapezoid(rho, x) if hasattr(np, "trapezoid") else np.trapz(rho, x)
    assert mass == pytest.approx(0.5 * 1.0 + 0.5 * 0.125, abs=1e-5)


def test_double_rarefaction_centre():
    p = get_problem("double_rarefaction")
    u = p.exact_solution(np.array([0.0]), 0.3)
    assert u[1, 0] == pytest.approx(0.0, abs=1e-12)
    assert u[0, 0] < 1e-3


def test_sedov_energy_and_scaling():
    s = PlanarSedov(1.0, 1.0, 1.4)
    r1, r2 = s.shock_radius(1e-3), s.shock_radius(8e-3)
    assert r2 / r1 == pytest.approx(4.0, rel=1e-12)
    x = np.linspace(-1.2 * r1, 1.2 * r1, 400001)
    E = s.conservative(x, 1e-3)[2]
    tot = np.trapezoid(E, x) if hasattr(np, "trapezoid") else np.trapz(E, x)
    assert tot == pytest.approx(1.0, rel=2e-3)


@pytest.mark.parametrize("name", PROBLEM_NAMES)
def test_all_problems_build(name):
    p = get_problem(name)
    assert p.nvar in (1, 3)


def test_unknown_problem():
    with pytest.raises(ConfigError):
        get_problem("kelvin_helmholtz")
