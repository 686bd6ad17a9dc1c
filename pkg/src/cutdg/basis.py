"""Reference-element Legendre basis and Gauss quadrature on [0, 1].

All rules are normalized to the unit interval with weights summing to one.
Physical integrals over a subinterval [a, b] are obtained by mapping the
nodes affinely and scaling the weights by (b - a).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np
from numpy.polynomial import legendre as npleg
from numpy.polynomial import Legendre


@dataclass(frozen=True)
class QuadratureRule:
    kind: str
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return len(self.nodes)

    def mapped(self, a, b, width=None):
        """Nodes and weights on [a, b]; `a` and `b` may be arrays (broadcast on a new last axis).

        `width` overrides b - a in the weights when the caller knows it more
        accurately than the difference of two nearby large numbers.
        """
        a = np.asarray(a, dtype=float)[..., None]
        b = np.asarray(b, dtype=float)[..., None]
        w = b - a if width is None else np.asarray(width, dtype=float)[..., None]
        return a + (b - a) * self.nodes, w * self.weights


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> QuadratureRule:
    if n < 1:
        raise ValueError("Gauss-Legendre rule needs n >= 1")
    x, w = npleg.leggauss(n)
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule("legendre", nodes, weights)


@lru_cache(maxsize=None)
def gauss_lobatto(q: int) -> QuadratureRule:
    """q-point Gauss-Lobatto rule, exact to degree 2q-3."""
    if q < 2:
        raise ValueError("Gauss-Lobatto rule needs q >= 2")
    if q == 2:
        x = np.array([-1.0, 1.0])
        w = np.array([1.0, 1.0])
    else:
        pq = Legendre.basis(q - 1)
        interior = np.sort(pq.deriv().roots().real)
        x = np.concatenate(([-1.0], interior, [1.0]))
        w = 2.0 / (q * (q - 1) * pq(x) ** 2)
    # symmetrize against round-off so w[0] == w[-1] exactly
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule("lobatto", nodes, weights)


def lobatto_order_for_degree(p: int) -> int:
    """Smallest q >= 2 with 2q - 3 >= p."""
    if p < 0:
        raise ValueError("degree must be nonnegative")
    q = 2
    while 2 * q - 3 < p:
        q += 1
    return q


def first_lobatto_weight(p: int) -> float:
    return float(gauss_lobatto(lobatto_order_for_degree(p)).weights[0])


def _shifted_legendre(n: int) -> list:
    """Integer monomial coefficients L[k][m] of the Legendre polynomial P_k(2 xi - 1)."""
    return [[(-1) ** (k + m) * comb(k, m) * comb(k + m, m) if m <= k else 0 for m in range(n)] for k in range(n)]


def _rational_inverse(L: list) -> list:
    """Inverse of a lower-triangular integer matrix in exact arithmetic."""
    n = len(L)
    inv = [[Fraction(0)] * n for _ in range(n)]
    for col in range(n):
        for i in range(n):
            acc = Fraction(int(i == col))
            for k in range(i):
                acc -= L[i][k] * inv[k][col]
            inv[i][col] = acc / L[i][i]
    return inv


class LegendreBasis:
    """Orthonormal Legendre polynomials psi_k(xi) = sqrt(2k+1) P_k(2 xi - 1) on [0, 1].

    On a background element I_j = [x_{j-1/2}, x_{j+1/2}] the physical basis
    is phi_k(x) = psi_k((x - x_{j-1/2}) / h), so the element mass matrix is
    h times the identity and mode 0 is the element mean.
    """

    def __init__(self, p: int):
        if p < 0:
            raise ValueError("degree must be nonnegative")
        self.p = p
        self.n = p + 1
        L = _shifted_legendre(self.n)
        self._L = L
        root = np.sqrt(2.0 * np.arange(self.n) + 1.0)
        # psi_k(xi) = sum_m mono[k, m] xi**m
        self.to_monomial = np.array(L, dtype=float) * root[:, None]
        self.from_monomial = np.array(_rational_inverse(L), dtype=float) / root[None, :]
        self._root = root

    def eval(self, xi, deriv: int = 0) -> np.ndarray:
        """Values (or xi-derivatives) of all basis functions, shape xi.shape + (n,)."""
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(xi.shape + (self.n,))
        for m in range(deriv, self.n):
            fac = 1.0
            for r in range(deriv):
                fac *= m - r
            out += fac * xi[..., None] ** (m - deriv) * self.to_monomial[:, m]
        return out

    def derivatives_at(self, xi) -> np.ndarray:
        """All xi-derivatives 0..p at the points: shape xi.shape + (p+1, n)."""
        return np.stack([self.eval(xi, d) for d in range(self.n)], axis=-2)

    def shift_matrix(self, d: float) -> np.ndarray:
        """T with psi(xi - d) @ c == psi(xi) @ (T @ c).

        Re-expresses a polynomial written in the basis of a neighbour element
        offset by d element widths in the local basis; exact for polynomials.
        """
        # exact rational re-expansion of P_j(xi - d) in P_i(xi), then rescale
        n = self.n
        dd = Fraction(float(d))
        Linv = _rational_inverse(self._L)
        S = [[Fraction(0)] * n for _ in range(n)]
        for j in range(n):
            mono = [Fraction(0)] * n
            for m, c in enumerate(self._L[j]):
                # c (xi - d)^m
                for r in range(m + 1):
                    mono[r] += c * comb(m, r) * (-dd) ** (m - r)
            for i in range(n):
                S[i][j] = sum(mono[r] * Linv[r][i] for r in range(n))
        S = np.array([[float(v) for v in row] for row in S])
        return S * self._root[None, :] / self._root[:, None]

    def mass_on(self, a, b, width=None) -> np.ndarray:
        """int_a^b psi_k psi_l dxi on the reference element, a, b in [0, 1]."""
        rule = gauss_legendre(self.n)
        x, w = rule.mapped(a, b, width)
        v = self.eval(x)
        return np.einsum("...q,...qk,...ql->...kl", w, v, v)

    def integral_on(self, a, b, width=None) -> np.ndarray:
        """int_a^b psi_k dxi for every k."""
        rule = gauss_legendre(self.n)
        x, w = rule.mapped(a, b, width)
        return np.einsum("...q,...qk->...k", w, self.eval(x))
