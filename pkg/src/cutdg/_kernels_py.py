"""Pure numpy implementations of the per-macro-element limiter kernels.

These define the reference semantics; the compiled module must agree with
them to round-off.
"""
from __future__ import annotations

import numpy as np

BISECTION_ITERS = 60


def horner(mono: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Evaluate rows of monomial coefficients (n, P) at t (n, k)."""
    out = np.zeros(t.shape)
    for m in range(mono.shape[1] - 1, -1, -1):
        out = out * t + mono[:, m : m + 1]
    return out


def _critical_points(mono: np.ndarray) -> np.ndarray:
    """Real roots of the derivative for degree <= 3, NaN where absent; shape (n, 2)."""
    n, P = mono.shape
    out = np.full((n, 2), np.nan)
    if P < 3:
        return out
    c1 = mono[:, 1]
    c2 = 2.0 * mono[:, 2]
    c3 = 3.0 * mono[:, 3] if P >= 4 else np.zeros(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        lin = c3 == 0.0
        out[:, 0] = np.where(lin & (c2 != 0.0), -c1 / c2, np.nan)
        disc = c2 * c2 - 4.0 * c3 * c1
        ok = ~lin & (disc >= 0.0)
        q = -0.5 * (c2 + np.copysign(np.sqrt(np.where(ok, disc, 0.0)), c2))
        r1 = q / c3
        r2 = np.where(q != 0.0, c1 / q, 0.0)
        out[:, 0] = np.where(ok, r1, out[:, 0])
        out[:, 1] = np.where(ok, r2, np.nan)
    return out


def poly_extrema(mono, lo, hi):
    """Exact (min, max) of each row polynomial over [lo, hi]; degree <= 3."""
    mono = np.ascontiguousarray(mono, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    crit = _critical_points(mono)
    crit = np.where(np.isfinite(crit), np.clip(crit, lo[:, None], hi[:, None]), lo[:, None])
    pts = np.concatenate((lo[:, None], hi[:, None], crit), axis=1)
    vals = horner(mono, pts)
    return vals.min(axis=1), vals.max(axis=1)


def scalar_theta(mean, vmin, vmax, lower, upper):
    """theta = min(|(M - mean)/(max - mean)|, |(m - mean)/(min - mean)|, 1)."""
    mean = np.asarray(mean, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        tu = np.where(vmax > upper, np.abs((upper - mean) / (vmax - mean)), 1.0)
        tl = np.where(vmin < lower, np.abs((lower - mean) / (vmin - mean)), 1.0)
    theta = np.minimum(np.minimum(tu, tl), 1.0)
    return np.where(np.isfinite(theta), theta, 0.0)


def _pressure_gap(r, m, e, epsp):
    # rho E - m^2/2 - eps' rho, which has the sign of p - eps when rho > 0
    return r * e - 0.5 * m * m - epsp * r


def positivity_thetas(rho, mom, ener, rbar, mbar, ebar, eps_rho, eps_p, gamma):
    """Two-stage positivity scaling factors per macro-element.

    rho, mom, ener are (n, k) values at the check points; bars are (n,) means.
    eps_rho and eps_p are (n,) per-macro targets.  Returns (theta1, theta2):
    density is scaled about its mean by theta1, then the full state by theta2.
    """
    rho = np.asarray(rho, dtype=float)
    rmin = rho.min(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(rmin < eps_rho, (rbar - eps_rho) / (rbar - rmin), 1.0)
    theta1 = np.clip(np.where(np.isfinite(t1), t1, 0.0), 0.0, 1.0)
    r1 = rbar[:, None] + theta1[:, None] * (rho - rbar[:, None])

    epsp = (eps_p / (gamma - 1.0))[:, None]
    gap = _pressure_gap(r1, mom, ener, epsp)
    bad = (gap < 0.0) | (r1 <= 0.0)
    t = np.ones_like(r1)
    if not np.any(bad):
        return theta1, np.ones_like(theta1)

    ii, jj = np.nonzero(bad)
    R0, M0, E0 = rbar[ii], mbar[ii], ebar[ii]
    dR, dM, dE = r1[ii, jj] - R0, mom[ii, jj] - M0, ener[ii, jj] - E0
    ep = epsp[ii, 0]
    A = dR * dE - 0.5 * dM * dM
    B = R0 * dE + E0 * dR - M0 * dM - ep * dR
    C = R0 * E0 - 0.5 * M0 * M0 - ep * R0
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = B * B - 4.0 * A * C
        sq = np.sqrt(np.where(disc >= 0.0, disc, np.nan))
        q = -0.5 * (B + np.copysign(sq, B))
        cand1 = np.where(A != 0.0, q / A, np.nan)
        cand2 = np.where(q != 0.0, C / q, np.nan)
        lin = np.where(B != 0.0, -C / B, np.nan)
    cands = np.stack((cand1, cand2, np.where(A == 0.0, lin, np.nan)))
    valid = np.isfinite(cands) & (cands >= 0.0) & (cands <= 1.0)
    root = np.where(valid, cands, np.inf).min(axis=0)
    root = np.where(C <= 0.0, 0.0, root)

    def gap_at(tt):
        return _pressure_gap(R0 + tt * dR, M0 + tt * dM, E0 + tt * dE, ep)

    ok = np.isfinite(root) & (gap_at(np.where(np.isfinite(root), root, 0.0)) >= 0.0) & (
        R0 + np.where(np.isfinite(root), root, 0.0) * dR > 0.0
    )
    if not np.all(ok):
        lo = np.zeros(int((~ok).sum()))
        hi = np.ones_like(lo)
        sel = ~ok
        for _ in range(BISECTION_ITERS):
            mid = 0.5 * (lo + hi)
            g = _pressure_gap(R0[sel] + mid * dR[sel], M0[sel] + mid * dM[sel], E0[sel] + mid * dE[sel], ep[sel])
            good = (g >= 0.0) & (R0[sel] + mid * dR[sel] > 0.0)
            lo = np.where(good, mid, lo)
            hi = np.where(good, hi, mid)
        root = root.copy()
        root[sel] = lo
    t[ii, jj] = root
    return theta1, t.min(axis=1)


def minmod3(a, b, c, thresh=0.0):
    """TVB-modified minmod; NaN in b or c means the argument is absent.

    Returns a unchanged where |a| <= thresh.
    """
    a = np.asarray(a, dtype=float)
    b = np.where(np.isnan(b), a, b)
    c = np.where(np.isnan(c), a, c)
    s = np.sign(a)
    agree = (np.sign(b) == s) & (np.sign(c) == s)
    mag = np.minimum(np.abs(a), np.minimum(np.abs(b), np.abs(c)))
    out = np.where(agree, s * mag, 0.0)
    return np.where(np.abs(a) <= thresh, a, out)
