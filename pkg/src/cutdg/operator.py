"""Stabilized semi-discrete Cut-DG operator.

Residual of the weak form with global Lax-Friedrichs fluxes on element edges,
subdomain interfaces and boundaries, the explicit ghost penalty J0, and the
mass operator (u, v)_K + gamma1 J1(u, v) assembled and factored once per
macro-element.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .basis import LegendreBasis, gauss_legendre, gauss_lobatto, lobatto_order_for_degree
from .errors import InadmissibleState, SingularBlock
from .mesh import MeshComplex

LAMBDA_FLOOR = 1e-12


def penalty_weights(p: int, variant: str = "scaled") -> np.ndarray:
    """omega_k for k = 0..p.

    ``"scaled"``: 1/((k!)^2 (2k+1)); ``"factorial"``: 1/(k!)^2.
    """
    k = np.arange(p + 1)
    fact = np.array([math.factorial(int(i)) for i in k], dtype=float)
    if variant == "scaled":
        return 1.0 / (fact**2 * (2 * k + 1))
    if variant == "factorial":
        return 1.0 / fact**2
    raise ValueError(f"unknown penalty weight variant {variant!r}")


@dataclass
class DgState:
    """Coefficients (active element, variable, mode) plus bookkeeping.

    ``inflow`` accumulates the time-integrated net boundary flux per variable
    so that ``total_mass(state) - state.inflow`` is invariant under every
    update of the scheme.  ``smooth`` marks macro-elements on which the state
    is a single polynomial (set by reconstruction).
    """

    coeffs: np.ndarray
    t: float = 0.0
    inflow: np.ndarray | None = None
    smooth: np.ndarray | None = None

    def __post_init__(self):
        if self.inflow is None:
            self.inflow = np.zeros(self.coeffs.shape[1])

    @property
    def nvar(self) -> int:
        return self.coeffs.shape[1]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[2] - 1

    def copy(self) -> "DgState":
        return DgState(
            self.coeffs.copy(),
            self.t,
            self.inflow.copy(),
            None if self.smooth is None else self.smooth.copy(),
        )


def combine(terms) -> DgState:
    """Linear combination sum_k a_k * state_k (coefficients, time and inflow).

    Convex combinations are evaluated as increments on the last state, so a
    state shared by all terms is reproduced exactly.
    """
    terms = list(terms)
    smooth = terms[0][1].smooth
    smooth = None if smooth is None else smooth.copy()
    for _, s in terms[1:]:
        if smooth is not None:
            smooth = None if s.smooth is None else (smooth & s.smooth)
    if abs(sum(a for a, _ in terms) - 1.0) < 1e-14:
        _, base = terms[-1]
        coeffs, t, inflow = base.coeffs.copy(), base.t, np.array(base.inflow, dtype=float)
        for a, s in terms[:-1]:
            coeffs += a * (s.coeffs - base.coeffs)
            t += a * (s.t - base.t)
            inflow = inflow + a * (s.inflow - base.inflow)
        return DgState(coeffs, t, inflow, smooth)
    a0, s0 = terms[0]
    coeffs = a0 * s0.coeffs
    t = a0 * s0.t
    inflow = a0 * s0.inflow
    for a, s in terms[1:]:
        coeffs = coeffs + a * s.coeffs
        t += a * s.t
        inflow = inflow + a * s.inflow
    return DgState(coeffs, t, inflow, smooth)


@dataclass
class Rate:
    """Time derivative of a state: coefficient rate and boundary inflow rate."""

    coeffs: np.ndarray
    inflow: np.ndarray


def euler_update(state: DgState, rate: Rate, dt: float) -> DgState:
    return DgState(state.coeffs + dt * rate.coeffs, state.t + dt, state.inflow + dt * rate.inflow, None)


@dataclass
class MassGroup:
    size: int
    macros: np.ndarray
    elems: np.ndarray  # (n, size)
    blocks: np.ndarray  # (n, size*P, size*P)
    inverse: np.ndarray
    factors: list = field(repr=False, default_factory=list)


def lax_friedrichs_flux(uL, uR, lam, model, fL=None, fR=None):
    """f_hat = 0.5 (f(uL) + f(uR)) - 0.5 lam (uR - uL), variables on axis 1.

    1-D inputs are treated as a single state vector.
    """
    uL = np.asarray(uL, dtype=float)
    uR = np.asarray(uR, dtype=float)
    single = uL.ndim == 1
    if single:
        uL, uR = uL[None, :], uR[None, :]
    if fL is None:
        fL = model.flux(uL)
    if fR is None:
        fR = model.flux(uR)
    out = 0.5 * (fL + fR) - 0.5 * lam * (uR - uL)
    return out[0] if single else out


class SemiDiscreteOperator:
    def __init__(
        self,
        cx: MeshComplex,
        p: int,
        nvar: int = 1,
        gamma0: float = 0.25,
        gamma1: float = 0.75,
        omega: str = "scaled",
        volume_points: int | None = None,
    ):
        if gamma0 <= 0 or gamma1 <= 0:
            raise ValueError("penalty parameters must be positive")
        self.cx = cx
        self.p = p
        self.P = p + 1
        self.nvar = nvar
        self.gamma0 = gamma0
        self.gamma1 = gamma1
        self.omega = penalty_weights(p, omega)
        self.omega_variant = omega
        self.basis = LegendreBasis(p)
        self.h = cx.h
        self.q = lobatto_order_for_degree(p)
        self._build_volume(volume_points or (p + 2))
        self._build_edges()
        self._build_penalty()
        self._build_mass()
        self._build_checkpoints()

    # -- geometry-dependent precomputation -------------------------------------------
    def _xi(self, x, elems):
        return (x - self.cx.elem_left[elems]) / self.h

    def _build_volume(self, nq):
        cx = self.cx
        rule = gauss_legendre(nq)
        x, w = rule.mapped(cx.elem_a, cx.elem_b)
        xi = (x - cx.elem_left[:, None]) / self.h
        self.vol_x = x
        self.vol_w = w
        self.vol_B = self.basis.eval(xi)  # (ne, nq, P)
        self.vol_dBw = self.basis.eval(xi, 1) / self.h * w[..., None]
        self.vol_Bt = np.ascontiguousarray(self.vol_B.transpose(0, 2, 1))

    def _build_edges(self):
        cx = self.cx
        n = cx.n_active
        x = np.concatenate((cx.elem_a, [cx.elem_b[-1]]))
        self.edge_x = x
        TL = np.zeros((n + 1, self.P))
        TR = np.zeros((n + 1, self.P))
        TL[1:] = self.basis.eval((x[1:] - cx.elem_left) / self.h)
        TR[:-1] = self.basis.eval((x[:-1] - cx.elem_left) / self.h)
        self.TL = TL
        self.TR = TR
        self.dT = (TL[1:] - TR[:-1])[:, None, :]  # [v] over each K
        kind = np.ones(n + 1, dtype=int)
        kind[0] = 0
        kind[-1] = 3
        kind[1:-1][cx.elem_sub[1:] != cx.elem_sub[:-1]] = 2
        self.edge_kind = kind
        self.interface_edges = np.nonzero(kind == 2)[0]

    def _build_penalty(self):
        """Edge data for J_s: element pairs inside each macro-element."""
        cx = self.cx
        left, right, mac = [], [], []
        for m in range(cx.n_macros):
            s0, sz = cx.macro_start[m], cx.macro_size[m]
            for k in range(sz - 1):
                left.append(s0 + k)
                right.append(s0 + k + 1)
                mac.append(m)
        self.pen_left = np.array(left, dtype=int)
        self.pen_right = np.array(right, dtype=int)
        self.pen_macro = np.array(mac, dtype=int)
        xe = cx.elem_b[self.pen_left] if len(left) else np.zeros(0)
        # derivative tables (edge, k, mode) in xi-derivatives; J_s = h^s sum_k omega_k [.][.]
        self.pen_DL = self.basis.derivatives_at((xe - cx.elem_left[self.pen_left]) / self.h)
        self.pen_DR = self.basis.derivatives_at((xe - cx.elem_left[self.pen_right]) / self.h)

    def element_mass(self) -> np.ndarray:
        cx = self.cx
        return self.h * self.basis.mass_on(
            (cx.elem_a - cx.elem_left) / self.h, (cx.elem_b - cx.elem_left) / self.h, cx.elem_width / self.h
        )

    def penalty_matrix(self, m: int, s: int = 1) -> np.ndarray:
        """J_s restricted to macro-element m, as a (size*P, size*P) matrix."""
        cx = self.cx
        P = self.P
        sz = cx.macro_size[m]
        s0 = cx.macro_start[m]
        J = np.zeros((sz * P, sz * P))
        for e in np.nonzero(self.pen_macro == m)[0]:
            a = (self.pen_left[e] - s0) * P
            b = (self.pen_right[e] - s0) * P
            for k in range(P):
                g = np.zeros(sz * P)
                g[a : a + P] = -self.pen_DL[e, k]
                g[b : b + P] = self.pen_DR[e, k]
                J += self.omega[k] * np.outer(g, g)
        return self.h**s * J

    def _build_mass(self):
        cx = self.cx
        P = self.P
        Me = self.element_mass()
        self.elem_mass = Me
        self.groups = {}
        for sz in np.unique(cx.macro_size):
            macros = np.nonzero(cx.macro_size == sz)[0]
            elems = cx.macro_start[macros][:, None] + np.arange(sz)
            blocks = np.zeros((len(macros), sz * P, sz * P))
            for r, m in enumerate(macros):
                for k in range(sz):
                    blocks[r, k * P : (k + 1) * P, k * P : (k + 1) * P] = Me[elems[r, k]]
                if sz > 1:
                    blocks[r] += self.gamma1 * self.penalty_matrix(m, 1)
            inv = np.empty_like(blocks)
            factors = []
            eye = np.eye(sz * P)
            for r in range(len(macros)):
                try:
                    f = cho_factor(blocks[r], lower=True)
                except np.linalg.LinAlgError as exc:
                    raise SingularBlock(f"mass block of macro-element {macros[r]} is not SPD") from exc
                factors.append(f)
                inv[r] = cho_solve(f, eye)
            self.groups[int(sz)] = MassGroup(int(sz), macros, elems, blocks, inv, factors)

    def _build_checkpoints(self):
        """Gauss-Lobatto points on every intersection K and on every I_M."""
        cx = self.cx
        rule = gauss_lobatto(self.q)
        xs, es = [], []
        x, _ = rule.mapped(cx.elem_a, cx.elem_b)
        xs.append(x.ravel())
        es.append(np.repeat(np.arange(cx.n_active), rule.n))
        for m in range(cx.n_macros):
            s0, sz = cx.macro_start[m], cx.macro_size[m]
            if sz == 1:
                continue
            xm, _ = rule.mapped(cx.elem_a[s0], cx.elem_b[s0 + sz - 1])
            e = s0 + np.searchsorted(cx.elem_b[s0 : s0 + sz], xm, side="left")
            xs.append(xm)
            es.append(np.minimum(e, s0 + sz - 1))
        self.check_x = np.concatenate(xs)
        self.check_elem = np.concatenate(es)
        self.check_B = self.basis.eval(self._xi(self.check_x, self.check_elem))

    # -- evaluation helpers ----------------------------------------------------------
    def values_at_checkpoints(self, coeffs: np.ndarray) -> np.ndarray:
        """(nvar, npts) values at every check point."""
        return np.einsum("pk,pvk->vp", self.check_B, coeffs[self.check_elem])

    def evaluate(self, coeffs: np.ndarray, x) -> np.ndarray:
        """(nvar, len(x)) values; each x uses the active element that contains it."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        e = self.cx.locate(x)
        B = self.basis.eval(self._xi(x, e))
        return np.einsum("pk,pvk->vp", B, coeffs[e])

    def traces(self, coeffs):
        """Left and right states at every edge point (n+1 of them); ends are NaN."""
        n = self.cx.n_active
        nv = coeffs.shape[1]
        uminus = np.full((n + 1, nv), np.nan)
        uplus = np.full((n + 1, nv), np.nan)
        uminus[1:] = np.einsum("ek,evk->ev", self.TL[1:], coeffs)
        uplus[:-1] = np.einsum("ek,evk->ev", self.TR[:-1], coeffs)
        return uminus, uplus

    # -- residual --------------------------------------------------------------------
    def rhs(self, coeffs: np.ndarray, problem, lam: float, t: float, smooth=None):
        """Right-hand side -a(u, v) - gamma0 J0(u, v) and the net boundary inflow rate."""
        cx = self.cx
        n = cx.n_active
        uq = np.matmul(coeffs, self.vol_Bt)  # (ne, nv, nq)
        F = problem.volume_flux(uq, cx.elem_sub)
        # int f v' = int (f - f0) v' + f0 [v]; exact cancellation for constant states
        F0 = F[..., :1]
        R = np.matmul(F - F0, self.vol_dBw)  # (ne, nv, P)
        R += F0 * self.dT

        uminus, uplus = self.traces(coeffs)
        uminus[0], uplus[n] = problem.ghost_states(uplus[0], uminus[n], t)
        fhat = problem.numerical_flux(uminus, uplus, lam, self.edge_kind, cx.elem_sub)
        R += fhat[:-1, :, None] * self.TR[:-1, None, :]
        R -= fhat[1:, :, None] * self.TL[1:, None, :]

        if len(self.pen_left):
            self._add_j0(coeffs, R, smooth)
        return R, fhat[0] - fhat[n]

    def _add_j0(self, coeffs, R, smooth):
        L, Rr = self.pen_left, self.pen_right
        DL, DR = self.pen_DL, self.pen_DR
        active = slice(None)
        if smooth is not None:
            keep = ~smooth[self.pen_macro]
            if not np.any(keep):
                return
            active = np.nonzero(keep)[0]
            L, Rr, DL, DR = L[active], Rr[active], DL[active], DR[active]
        # jumps[e, v, k] = D_R u_R - D_L u_L
        jumps = np.einsum("ekm,evm->evk", DR, coeffs[Rr]) - np.einsum("ekm,evm->evk", DL, coeffs[L])
        wj = self.gamma0 * self.omega * jumps
        np.add.at(R, L, np.einsum("evk,ekm->evm", wj, DL))
        np.add.at(R, Rr, -np.einsum("evk,ekm->evm", wj, DR))

    def solve_mass(self, R: np.ndarray) -> np.ndarray:
        out = np.empty_like(R)
        nv = R.shape[1]
        P = self.P
        for g in self.groups.values():
            X = R[g.elems].transpose(0, 2, 1, 3).reshape(len(g.macros), nv, g.size * P)
            Y = np.matmul(X, g.inverse)
            out[g.elems] = Y.reshape(len(g.macros), nv, g.size, P).transpose(0, 2, 1, 3)
        return out

    def rate(self, state: DgState, problem, lam: float) -> Rate:
        R, inflow = self.rhs(state.coeffs, problem, lam, state.t, state.smooth)
        return Rate(self.solve_mass(R), inflow)

    # -- projection and integrals -----------------------------------------------------
    def l2_project(self, u0, nvar: int, breakpoints=(), points: int | None = None) -> DgState:
        """Stabilized L2 projection: (u_h, v)_K + gamma1 J1(u_h, v) = (u0, v)_K."""
        cx = self.cx
        nq = points or max(2 * self.P + 4, 12)
        rule = gauss_legendre(nq)
        R = np.zeros((cx.n_active, nvar, self.P))
        bps = np.sort(np.asarray(breakpoints, dtype=float))
        for e in range(cx.n_active):
            a, b = cx.elem_a[e], cx.elem_b[e]
            inner = bps[(bps > a) & (bps < b)]
            cuts = np.concatenate(([a], inner, [b]))
            for lo, hi in zip(cuts[:-1], cuts[1:]):
                x, w = rule.mapped(lo, hi)
                vals = np.atleast_2d(np.asarray(u0(x), dtype=float)).reshape(nvar, -1)
                B = self.basis.eval((x - cx.elem_left[e]) / self.h)
                R[e] += (vals * w) @ B
        coeffs = self.solve_mass(R)
        return DgState(coeffs, 0.0, np.zeros(nvar), None)

    def element_integrals(self) -> np.ndarray:
        """int_K phi_k dx for every active element, shape (ne, P)."""
        if getattr(self, "_elem_int", None) is None:
            cx = self.cx
            self._elem_int = self.h * self.basis.integral_on(
                (cx.elem_a - cx.elem_left) / self.h, (cx.elem_b - cx.elem_left) / self.h, cx.elem_width / self.h
            )
            self._elem_int.flags.writeable = False
        return self._elem_int

    def total_mass(self, state: DgState) -> np.ndarray:
        return np.einsum("ek,evk->v", self.element_integrals(), state.coeffs)


def assemble(cx: MeshComplex, p: int, gamma0=0.25, gamma1=0.75, nvar=1, omega="scaled", volume_points=None):
    return SemiDiscreteOperator(cx, p, nvar, gamma0, gamma1, omega, volume_points)


def l2_project_initial(op: SemiDiscreteOperator, u0, nvar: int = 1, breakpoints=()) -> DgState:
    return op.l2_project(u0, nvar, breakpoints)


def total_mass(op: SemiDiscreteOperator, state: DgState) -> np.ndarray:
    return op.total_mass(state)


def global_lambda(op: SemiDiscreteOperator, state: DgState, problem) -> float:
    """Largest wave-speed estimate over all check points and edge traces."""
    vals = op.values_at_checkpoints(state.coeffs)  # (nv, npts)
    zones = problem.zone_of(op.cx.elem_sub[op.check_elem])
    speeds = problem.wave_speed(vals.T, zones)
    if not np.all(np.isfinite(speeds)):
        raise InadmissibleState("non-physical state at a check point")
    return max(float(np.max(speeds)), LAMBDA_FLOOR)


def forward_euler_update(op: SemiDiscreteOperator, state: DgState, dt: float, problem, lam=None) -> DgState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if lam is None:
        lam = global_lambda(op, state, problem)
    return euler_update(state, op.rate(state, problem, lam), dt)
