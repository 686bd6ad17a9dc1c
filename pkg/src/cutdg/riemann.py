"""Exact solution of the Riemann problem for the ideal-gas Euler equations.

Classical two-wave construction: the star pressure is the root of the
pressure function f_L(p) + f_R(p) + u_R - u_L, found by safeguarded Newton
iteration; the self-similar profile is then sampled wave by wave.  Includes
the vacuum-generating case.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq


@dataclass(frozen=True)
class Primitive:
    rho: float
    u: float
    p: float


def _sound(s: Primitive, g: float) -> float:
    return float(np.sqrt(g * s.p / s.rho))


def _f_and_df(p: float, s: Primitive, g: float):
    c = _sound(s, g)
    if p > s.p:  # shock
        A = 2.0 / ((g + 1.0) * s.rho)
        B = (g - 1.0) / (g + 1.0) * s.p
        q = np.sqrt(A / (p + B))
        return (p - s.p) * q, q * (1.0 - 0.5 * (p - s.p) / (p + B))
    # rarefaction
    r = p / s.p
    f = 2.0 * c / (g - 1.0) * (r ** ((g - 1.0) / (2.0 * g)) - 1.0)
    df = 1.0 / (s.rho * c) * r ** (-(g + 1.0) / (2.0 * g))
    return f, df


class ExactRiemannSolver:
    def __init__(self, left, right, gamma: float = 1.4, x0: float = 0.0, tol: float = 1e-12):
        self.L = left if isinstance(left, Primitive) else Primitive(*map(float, left))
        self.R = right if isinstance(right, Primitive) else Primitive(*map(float, right))
        self.g = gamma
        self.x0 = x0
        self.tol = tol
        self.cL = _sound(self.L, gamma)
        self.cR = _sound(self.R, gamma)
        du = self.R.u - self.L.u
        self.vacuum = 2.0 * (self.cL + self.cR) / (gamma - 1.0) <= du
        if self.vacuum:
            self.p_star = 0.0
            self.u_star = np.nan
        else:
            self.p_star = self._star_pressure()
            fL, _ = _f_and_df(self.p_star, self.L, gamma)
            fR, _ = _f_and_df(self.p_star, self.R, gamma)
            self.u_star = 0.5 * (self.L.u + self.R.u) + 0.5 * (fR - fL)

    def _phi(self, p):
        return _f_and_df(p, self.L, self.g)[0] + _f_and_df(p, self.R, self.g)[0] + self.R.u - self.L.u

    def _star_pressure(self) -> float:
        g = self.g
        L, R = self.L, self.R
        # two-rarefaction guess, always positive
        z = (g - 1.0) / (2.0 * g)
        p = ((self.cL + self.cR - 0.5 * (g - 1.0) * (R.u - L.u)) / (self.cL / L.p**z + self.cR / R.p**z)) ** (1.0 / z)
        p = max(p, 1e-14 * min(L.p, R.p))
        for _ in range(100):
            fL, dL = _f_and_df(p, L, g)
            fR, dR = _f_and_df(p, R, g)
            phi = fL + fR + R.u - L.u
            step = phi / (dL + dR)
            pn = p - step
            if pn <= 0.0:
                break
            if abs(pn - p) <= self.tol * 0.5 * (pn + p):
                return float(pn)
            p = pn
        # bracketed fallback
        lo, hi = 1e-300, max(L.p, R.p)
        while self._phi(hi) < 0.0:
            hi *= 2.0
        return float(brentq(self._phi, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500))

    def sample(self, x, t):
        """Primitive (rho, u, p) arrays at positions x and time t."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if t <= 0.0:
            left = x < self.x0
            return tuple(np.where(left, getattr(self.L, k), getattr(self.R, k)) for k in ("rho", "u", "p"))
        S = (x - self.x0) / t
        out = np.array([self._sample_one(s) for s in S]).T
        return out[0], out[1], out[2]

    def conservative(self, x, t):
        rho, u, p = self.sample(x, t)
        return np.stack((rho, rho * u, p / (self.g - 1.0) + 0.5 * rho * u * u))

    def _sample_one(self, S):
        g = self.g
        L, R, cL, cR = self.L, self.R, self.cL, self.cR
        if self.vacuum:
            sL = L.u + 2.0 * cL / (g - 1.0)
            sR = R.u - 2.0 * cR / (g - 1.0)
            if S <= sL:
                return self._left_fan(S)
            if S >= sR:
                return self._right_fan(S)
            return (0.0, 0.5 * (sL + sR), 0.0)
        ps, us = self.p_star, self.u_star
        if S <= us:
            if ps > L.p:
                sh = L.u - cL * np.sqrt((g + 1) / (2 * g) * ps / L.p + (g - 1) / (2 * g))
                if S <= sh:
                    return (L.rho, L.u, L.p)
                r = (ps / L.p + (g - 1) / (g + 1)) / ((g - 1) / (g + 1) * ps / L.p + 1.0)
                return (L.rho * r, us, ps)
            rs = L.rho * (ps / L.p) ** (1.0 / g)
            head = L.u - cL
            tail = us - cL * (ps / L.p) ** ((g - 1) / (2 * g))
            if S <= head:
                return (L.rho, L.u, L.p)
            if S >= tail:
                return (rs, us, ps)
            return self._left_fan(S)
        if ps > R.p:
            sh = R.u + cR * np.sqrt((g + 1) / (2 * g) * ps / R.p + (g - 1) / (2 * g))
            if S >= sh:
                return (R.rho, R.u, R.p)
            r = (ps / R.p + (g - 1) / (g + 1)) / ((g - 1) / (g + 1) * ps / R.p + 1.0)
            return (R.rho * r, us, ps)
        rs = R.rho * (ps / R.p) ** (1.0 / g)
        head = R.u + cR
        tail = us + cR * (ps / R.p) ** ((g - 1) / (2 * g))
        if S >= head:
            return (R.rho, R.u, R.p)
        if S <= tail:
            return (rs, us, ps)
        return self._right_fan(S)

    def _left_fan(self, S):
        g, L, c = self.g, self.L, self.cL
        if S <= L.u - c:
            return (L.rho, L.u, L.p)
        k = 2.0 / (g + 1) + (g - 1) / ((g + 1) * c) * (L.u - S)
        k = max(k, 0.0)
        return (L.rho * k ** (2 / (g - 1)), 2 / (g + 1) * (c + 0.5 * (g - 1) * L.u + S), L.p * k ** (2 * g / (g - 1)))

    def _right_fan(self, S):
        g, R, c = self.g, self.R, self.cR
        if S >= R.u + c:
            return (R.rho, R.u, R.p)
        k = 2.0 / (g + 1) - (g - 1) / ((g + 1) * c) * (R.u - S)
        k = max(k, 0.0)
        return (R.rho * k ** (2 / (g - 1)), 2 / (g + 1) * (-c + 0.5 * (g - 1) * R.u + S), R.p * k ** (2 * g / (g - 1)))
