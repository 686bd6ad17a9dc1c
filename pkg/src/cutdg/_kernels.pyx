# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-macro-element limiter kernels (same semantics as _kernels_py)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, copysign, isfinite, INFINITY

cnp.import_array()

DEF BISECTION_ITERS = 60


cdef inline double _horner(const double[:, ::1] mono, Py_ssize_t i, double t) noexcept nogil:
    cdef Py_ssize_t m
    cdef double out = 0.0
    for m in range(mono.shape[1] - 1, -1, -1):
        out = out * t + mono[i, m]
    return out


cdef inline double _clip(double x, double lo, double hi) noexcept nogil:
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


def poly_extrema(mono, lo, hi):
    cdef const double[:, ::1] c = np.ascontiguousarray(mono, dtype=np.float64)
    cdef const double[::1] a = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(hi, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0], P = c.shape[1], i, k
    vmin_arr = np.empty(n)
    vmax_arr = np.empty(n)
    cdef double[::1] vmin = vmin_arr
    cdef double[::1] vmax = vmax_arr
    cdef double pts[4]
    cdef int npts
    cdef double c1, c2, c3, disc, q, v, lo_i, hi_i
    with nogil:
        for i in range(n):
            lo_i = a[i]
            hi_i = b[i]
            pts[0] = lo_i
            pts[1] = hi_i
            npts = 2
            if P >= 3:
                c1 = c[i, 1]
                c2 = 2.0 * c[i, 2]
                c3 = 3.0 * c[i, 3] if P >= 4 else 0.0
                if c3 == 0.0:
                    if c2 != 0.0:
                        pts[npts] = _clip(-c1 / c2, lo_i, hi_i)
                        npts += 1
                else:
                    disc = c2 * c2 - 4.0 * c3 * c1
                    if disc >= 0.0:
                        q = -0.5 * (c2 + copysign(sqrt(disc), c2))
                        v = q / c3
                        if isfinite(v):
                            pts[npts] = _clip(v, lo_i, hi_i)
                            npts += 1
                        pts[npts] = _clip(c1 / q, lo_i, hi_i) if q != 0.0 else _clip(0.0, lo_i, hi_i)
                        npts += 1
            vmin[i] = INFINITY
            vmax[i] = -INFINITY
            for k in range(npts):
                v = _horner(c, i, pts[k])
                if v < vmin[i]:
                    vmin[i] = v
                if v > vmax[i]:
                    vmax[i] = v
    return vmin_arr, vmax_arr


def scalar_theta(mean, vmin, vmax, double lower, double upper):
    cdef const double[::1] u = np.ascontiguousarray(mean, dtype=np.float64)
    cdef const double[::1] mn = np.ascontiguousarray(vmin, dtype=np.float64)
    cdef const double[::1] mx = np.ascontiguousarray(vmax, dtype=np.float64)
    cdef Py_ssize_t n = u.shape[0], i
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double th, t
    with nogil:
        for i in range(n):
            th = 1.0
            if mx[i] > upper:
                t = (upper - u[i]) / (mx[i] - u[i])
                th = min(th, abs(t)) if isfinite(t) else 0.0
            if mn[i] < lower:
                t = (lower - u[i]) / (mn[i] - u[i])
                th = min(th, abs(t)) if isfinite(t) else 0.0
            out[i] = th
    return out_arr


cdef inline double _gap(double r, double m, double e, double epsp) noexcept nogil:
    return r * e - 0.5 * m * m - epsp * r


cdef double _root(double R0, double M0, double E0, double dR, double dM, double dE, double ep) noexcept nogil:
    cdef double A = dR * dE - 0.5 * dM * dM
    cdef double B = R0 * dE + E0 * dR - M0 * dM - ep * dR
    cdef double C = R0 * E0 - 0.5 * M0 * M0 - ep * R0
    cdef double disc, q, best = INFINITY, cand, lo, hi, mid
    cdef int it
    if C <= 0.0:
        return 0.0
    if A != 0.0:
        disc = B * B - 4.0 * A * C
        if disc >= 0.0:
            q = -0.5 * (B + copysign(sqrt(disc), B))
            cand = q / A
            if isfinite(cand) and 0.0 <= cand <= 1.0:
                best = min(best, cand)
            if q != 0.0:
                cand = C / q
                if isfinite(cand) and 0.0 <= cand <= 1.0:
                    best = min(best, cand)
    elif B != 0.0:
        cand = -C / B
        if 0.0 <= cand <= 1.0:
            best = cand
    if isfinite(best) and _gap(R0 + best * dR, M0 + best * dM, E0 + best * dE, ep) >= 0.0 and R0 + best * dR > 0.0:
        return best
    lo = 0.0
    hi = 1.0
    for it in range(BISECTION_ITERS):
        mid = 0.5 * (lo + hi)
        if _gap(R0 + mid * dR, M0 + mid * dM, E0 + mid * dE, ep) >= 0.0 and R0 + mid * dR > 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def positivity_thetas(rho, mom, ener, rbar, mbar, ebar, eps_rho, eps_p, double gamma):
    cdef const double[:, ::1] r = np.ascontiguousarray(rho, dtype=np.float64)
    cdef const double[:, ::1] m = np.ascontiguousarray(mom, dtype=np.float64)
    cdef const double[:, ::1] e = np.ascontiguousarray(ener, dtype=np.float64)
    cdef const double[::1] R = np.ascontiguousarray(rbar, dtype=np.float64)
    cdef const double[::1] M = np.ascontiguousarray(mbar, dtype=np.float64)
    cdef const double[::1] E = np.ascontiguousarray(ebar, dtype=np.float64)
    cdef const double[::1] er = np.ascontiguousarray(eps_rho, dtype=np.float64)
    cdef const double[::1] epv = np.ascontiguousarray(eps_p, dtype=np.float64)
    cdef Py_ssize_t n = r.shape[0], k = r.shape[1], i, j
    t1_arr = np.empty(n)
    t2_arr = np.empty(n)
    cdef double[::1] t1 = t1_arr
    cdef double[::1] t2 = t2_arr
    cdef double rmin, th, r1, ep, tt
    with nogil:
        for i in range(n):
            rmin = INFINITY
            for j in range(k):
                if r[i, j] < rmin:
                    rmin = r[i, j]
            th = 1.0
            if rmin < er[i]:
                th = (R[i] - er[i]) / (R[i] - rmin)
                if not isfinite(th):
                    th = 0.0
                th = _clip(th, 0.0, 1.0)
            t1[i] = th
            ep = epv[i] / (gamma - 1.0)
            tt = 1.0
            for j in range(k):
                r1 = R[i] + th * (r[i, j] - R[i])
                if _gap(r1, m[i, j], e[i, j], ep) < 0.0 or r1 <= 0.0:
                    tt = min(tt, _root(R[i], M[i], E[i], r1 - R[i], m[i, j] - M[i], e[i, j] - E[i], ep))
            t2[i] = tt
    return t1_arr, t2_arr


def minmod3(a, b, c, double thresh=0.0):
    a_arr = np.asarray(a, dtype=np.float64)
    shape = a_arr.shape
    cdef const double[::1] x = np.ascontiguousarray(a_arr).ravel()
    cdef const double[::1] y = np.ascontiguousarray(np.broadcast_to(b, shape), dtype=np.float64).ravel()
    cdef const double[::1] z = np.ascontiguousarray(np.broadcast_to(c, shape), dtype=np.float64).ravel()
    cdef Py_ssize_t n = x.shape[0], i
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double u, v, w, s, mag
    with nogil:
        for i in range(n):
            u = x[i]
            if abs(u) <= thresh:
                out[i] = u
                continue
            v = y[i] if y[i] == y[i] else u
            w = z[i] if z[i] == z[i] else u
            if u > 0.0 and v > 0.0 and w > 0.0:
                out[i] = min(u, min(v, w))
            elif u < 0.0 and v < 0.0 and w < 0.0:
                out[i] = max(u, max(v, w))
            else:
                out[i] = 0.0
    return out_arr.reshape(shape)
