"""Conservative macro-element reconstruction.

Every member polynomial of a macro-element is re-expressed in the owner
element's basis (the extension is the identity on polynomials), the results
are averaged with weights |K_j|/|I_M|, and a constant c0 restores the
member integrals.  All of it is linear in the member coefficients, so the map
is precomputed once per macro-element.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import LegendreBasis, gauss_lobatto
from .operator import DgState, SemiDiscreteOperator


def extend(basis: LegendreBasis, coeffs: np.ndarray, offset: float) -> np.ndarray:
    """Coefficients of the same polynomial in the basis of an element `offset` widths to the left.

    A polynomial attached to background element j, written in the frame of
    element o = j - offset, keeps its pointwise values everywhere.
    """
    return basis.shift_matrix(offset) @ coeffs


@dataclass
class MacroGroup:
    """Precomputed data for all macro-elements of one member count."""

    size: int
    ids: np.ndarray  # macro ids (in the owning algebra)
    elems: np.ndarray  # (n, size) flattened active elements
    owner_left: np.ndarray  # (n,) left edge of the owner background element
    Q: np.ndarray  # (n, P, size*P): members -> macro polynomial in owner frame
    R: np.ndarray  # (n, size, P, P): macro polynomial -> member coefficients
    G: np.ndarray  # (n, P): integral over I_M of each owner basis function
    length: np.ndarray  # |I_M|
    lo: np.ndarray  # owner-frame xi of the left end of I_M
    hi: np.ndarray
    V: np.ndarray  # (n, npts, P) basis at the check points, owner frame
    BL: np.ndarray = None  # (n, P) basis at the ends of I_M
    BR: np.ndarray = None


class MacroAlgebra:
    """Linear maps for reconstruction and limiting over a set of macro-elements.

    Built from contiguous runs (start, size, owner position) of the active
    element ordering.  With every run of size one the same machinery acts
    element-wise on the intersections K.
    """

    def __init__(self, op: SemiDiscreteOperator, starts, sizes, owners):
        self.op = op
        cx = op.cx
        self.basis = op.basis
        self.h = cx.h
        self.P = op.P
        self.starts = np.asarray(starts, dtype=int)
        self.sizes = np.asarray(sizes, dtype=int)
        self.owners = np.asarray(owners, dtype=int)
        self.n = len(self.starts)
        self.elem_macro = np.repeat(np.arange(self.n), self.sizes)
        self.extent_a = cx.elem_a[self.starts]
        self.extent_b = cx.elem_b[self.starts + self.sizes - 1]
        # summed member widths, consistent with the element integrals
        self.length = np.bincount(self.elem_macro, weights=cx.elem_width[: len(self.elem_macro)], minlength=self.n)
        self.center = 0.5 * (self.extent_a + self.extent_b)
        self.subdomain = cx.elem_sub[self.starts]
        self._shift_cache = {}
        self.cache = {}  # per-group data owned by the limiters
        self.groups = [self._build_group(s) for s in np.unique(self.sizes)]

    @classmethod
    def macros(cls, op: SemiDiscreteOperator) -> "MacroAlgebra":
        cx = op.cx
        return cls(op, cx.macro_start, cx.macro_size, cx.macro_owner)

    @classmethod
    def elements(cls, op: SemiDiscreteOperator) -> "MacroAlgebra":
        n = op.cx.n_active
        return cls(op, np.arange(n), np.ones(n, dtype=int), np.zeros(n, dtype=int))

    def _shift(self, d: int) -> np.ndarray:
        if d not in self._shift_cache:
            self._shift_cache[d] = np.eye(self.P) if d == 0 else self.basis.shift_matrix(float(d))
        return self._shift_cache[d]

    def _build_group(self, size: int) -> MacroGroup:
        cx = self.op.cx
        P = self.P
        h = self.h
        ids = np.nonzero(self.sizes == size)[0]
        n = len(ids)
        elems = self.starts[ids][:, None] + np.arange(size)
        owner_elem = self.starts[ids] + self.owners[ids]
        owner_left = cx.elem_left[owner_elem]
        lo = (self.extent_a[ids] - owner_left) / h
        hi = (self.extent_b[ids] - owner_left) / h
        G = h * self.basis.integral_on(lo, hi, self.length[ids] / h)
        length = self.length[ids]
        gK = self.op.element_integrals()
        rule = gauss_lobatto(self.op.q)
        Q = np.zeros((n, P, size * P))
        R = np.zeros((n, size, P, P))
        xs = [rule.mapped(lo, hi)[0]]
        for k in range(size):
            e = elems[:, k]
            d = np.rint((cx.elem_left[e] - owner_left) / h).astype(int)
            w = (cx.elem_b[e] - cx.elem_a[e]) / length
            for r in range(n):
                T = self._shift(int(d[r]))
                blk = w[r] * T
                blk[0] += (gK[e[r]] - w[r] * (G[r] @ T)) / length[r]
                Q[r, :, k * P : (k + 1) * P] = blk
                R[r, k] = self._shift(-int(d[r]))
            if size > 1:
                xs.append(rule.mapped((cx.elem_a[e] - owner_left) / h, (cx.elem_b[e] - owner_left) / h)[0])
        V = self.basis.eval(np.concatenate(xs, axis=1))
        BL, BR = self.basis.eval(lo), self.basis.eval(hi)
        return MacroGroup(size, ids, elems, owner_left, Q, R, G, length, lo, hi, V, BL, BR)

    # -- basic maps ------------------------------------------------------------------
    def gather(self, g: MacroGroup, coeffs: np.ndarray) -> np.ndarray:
        """Member coefficients of a group as (n, nvar, size*P)."""
        X = coeffs[g.elems]  # (n, s, nv, P)
        n, s, nv, P = X.shape
        return X.transpose(0, 2, 1, 3).reshape(n, nv, s * P)

    def macro_poly(self, g: MacroGroup, coeffs: np.ndarray) -> np.ndarray:
        """Reconstructed polynomial (n, nvar, P) in the owner frame."""
        return np.matmul(self.gather(g, coeffs), g.Q.transpose(0, 2, 1))

    def scatter(self, g: MacroGroup, a: np.ndarray, coeffs: np.ndarray, rows=None) -> None:
        """Write the restriction of macro polynomials a (n, nvar, P) to the members."""
        R = g.R if rows is None else g.R[rows]
        E = g.elems if rows is None else g.elems[rows]
        # member k: c_k = R_k @ a
        coeffs[E] = np.einsum("nkpq,nvq->nkvp", R, a)

    def means(self, coeffs: np.ndarray) -> np.ndarray:
        """Mean over I_M of every variable for every macro-element, (n, nvar)."""
        ints = np.einsum("ek,evk->ev", self.op.element_integrals(), coeffs)
        tot = np.zeros((self.n, coeffs.shape[1]))
        np.add.at(tot, self.elem_macro, ints)
        return tot / self.length[:, None]

    def poly_mean(self, g: MacroGroup, a: np.ndarray) -> np.ndarray:
        return np.einsum("nk,nvk->nv", g.G, a) / g.length[:, None]

    def endpoint_values(self, g: MacroGroup, a: np.ndarray):
        return np.einsum("nk,nvk->nv", g.BL, a), np.einsum("nk,nvk->nv", g.BR, a)

    def values_at_checkpoints(self, g: MacroGroup, a: np.ndarray) -> np.ndarray:
        """(n, nvar, npts) values of the macro polynomials at the check points."""
        return np.einsum("npk,nvk->nvp", g.V, a)

    def to_monomial(self, a: np.ndarray) -> np.ndarray:
        """Monomial coefficients in the owner xi, same leading shape."""
        return a @ self.basis.to_monomial

    def from_monomial(self, b: np.ndarray) -> np.ndarray:
        return b @ self.basis.from_monomial


def reconstruct_macro(alg: MacroAlgebra, state: DgState, m: int) -> np.ndarray:
    """Macro polynomial (nvar, P) of macro-element m in its owner frame."""
    for g in alg.groups:
        hit = np.nonzero(g.ids == m)[0]
        if len(hit):
            r = hit[0]
            X = alg.gather(g, state.coeffs)[r]
            return X @ g.Q[r].T
    raise IndexError(m)


def apply_reconstruction(alg: MacroAlgebra, state: DgState, flagged=None) -> DgState:
    """Replace members of flagged macro-elements (all when None) by the reconstruction.

    The returned state records which macro-elements now carry one polynomial.
    """
    out = state.copy()
    n = alg.n
    mask = np.ones(n, dtype=bool) if flagged is None else np.asarray(flagged, dtype=bool)
    smooth = np.zeros(n, dtype=bool) if state.smooth is None or len(state.smooth) != n else state.smooth.copy()
    for g in alg.groups:
        rows = np.nonzero(mask[g.ids])[0]
        if g.size == 1:
            smooth[g.ids[rows]] = True
            continue
        if not len(rows):
            continue
        X = alg.gather(g, state.coeffs)[rows]
        a = np.matmul(X, g.Q[rows].transpose(0, 2, 1))
        alg.scatter(g, a, out.coeffs, rows)
        smooth[g.ids[rows]] = True
    out.smooth = smooth
    return out
