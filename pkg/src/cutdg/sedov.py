"""Planar point-blast similarity solution.

With shock position R(t) = (9 E0 t^2 / (8 rho0 I))^(1/3) and xi = |x - x_c| / R,
the profiles rho = rho0 G, u = R' F, p = rho0 R'^2 H solve

    F' = [F (F - xi)/2 - H/G] / [(F - xi)^2 - gamma H / G]
    G' = -G F' / (F - xi)
    H' = H (1 - gamma F') / (F - xi)

from the strong-shock state at xi = 1 inward.  I = int_0^1 (G F^2 / 2 + H / (gamma-1)) dxi
fixes the energy E0 deposited on the whole line.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np
from scipy.integrate import quad, solve_ivp

XI_MIN = 1e-7


class PlanarSedov:
    def __init__(self, energy: float, rho0: float = 1.0, gamma: float = 1.4, center: float = 0.0, p_background: float = 0.0):
        self.E0 = float(energy)
        self.rho0 = float(rho0)
        self.g = float(gamma)
        self.center = float(center)
        self.p_bg = float(p_background)

    def _rhs(self, xi, y):
        F, G, H = y
        g = self.g
        d = F - xi
        Fp = (0.5 * F * d - H / G) / (d * d - g * H / G)
        return [Fp, -G * Fp / d, H * (1.0 - g * Fp) / d]

    @cached_property
    def profile(self):
        g = self.g
        y0 = [2.0 / (g + 1.0), (g + 1.0) / (g - 1.0), 2.0 / (g + 1.0)]
        sol = solve_ivp(self._rhs, (1.0, XI_MIN), y0, method="LSODA", rtol=1e-11, atol=1e-14, dense_output=True)
        if not sol.success:
            raise RuntimeError(f"similarity integration failed: {sol.message}")
        return sol.sol

    @cached_property
    def energy_integral(self) -> float:
        g = self.g

        def integrand(xi):
            F, G, H = self.profile(max(xi, XI_MIN))
            return 0.5 * G * F * F + H / (g - 1.0)

        val, _ = quad(integrand, 0.0, 1.0, limit=200, epsabs=1e-13, epsrel=1e-11)
        return val

    def shock_radius(self, t: float) -> float:
        return (9.0 * self.E0 * t * t / (8.0 * self.rho0 * self.energy_integral)) ** (1.0 / 3.0)

    def sample(self, x, t):
        """Primitive (rho, u, p) at x and time t > 0."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        r = x - self.center
        R = self.shock_radius(t)
        Rdot = 2.0 * R / (3.0 * t)
        xi = np.abs(r) / R
        rho = np.full(x.shape, self.rho0)
        u = np.zeros(x.shape)
        p = np.full(x.shape, self.p_bg)
        inside = xi < 1.0
        if np.any(inside):
            F, G, H = self.profile(np.maximum(xi[inside], XI_MIN))
            rho[inside] = self.rho0 * G
            u[inside] = np.sign(r[inside]) * Rdot * F
            p[inside] = np.maximum(self.rho0 * Rdot * Rdot * H, self.p_bg)
        return rho, u, p

    def conservative(self, x, t):
        rho, u, p = self.sample(x, t)
        return np.stack((rho, rho * u, p / (self.g - 1.0) + 0.5 * rho * u * u))
