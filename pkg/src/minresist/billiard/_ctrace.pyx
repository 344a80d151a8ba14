# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batch ray tracer; mirrors ``_pytrace.trace_path`` step for step."""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt, hypot, fabs, copysign, isfinite, INFINITY

cnp.import_array()

DEF FWD_EPS = 1e-12
DEF GRAZE_EPS = 1e-9
DEF JUNCTION_TOL = 1e-9
DEF TANGENT_TOL = 1e-12
DEF PARAM_TOL = 1e-12
DEF REFINE_MAX = 1e-9


cdef inline void _nearest(const double[:, ::1] E, Py_ssize_t n,
                          double ox, double oz, double dx, double dz, double smin,
                          double* best_s, Py_ssize_t* best_k) noexcept nogil:
    cdef Py_ssize_t k
    cdef int pas
    cdef double ex, ez, denom, wx, wz, s, u
    cdef double xi, eta, dxi, deta, A, B, C, a4, disc, sq, q, r, t
    cdef bint lin
    best_s[0] = INFINITY
    best_k[0] = -1
    for k in range(n):
        if E[k, 0] != 0.0:
            continue
        ex = E[k, 3] - E[k, 1]
        ez = E[k, 4] - E[k, 2]
        denom = dx * ez - dz * ex
        if denom == 0.0:
            continue
        wx = E[k, 1] - ox
        wz = E[k, 2] - oz
        s = (wx * ez - wz * ex) / denom
        u = (wx * dz - wz * dx) / denom
        if s > smin and u >= -PARAM_TOL and u <= 1.0 + PARAM_TOL and s < best_s[0]:
            best_s[0] = s
            best_k[0] = k
    for pas in range(2):
        for k in range(n):
            if E[k, 0] != 1.0:
                continue
            wx = ox - E[k, 5]
            wz = oz - E[k, 6]
            xi = wx * E[k, 7] + wz * E[k, 8]
            eta = wx * E[k, 9] + wz * E[k, 10]
            dxi = dx * E[k, 7] + dz * E[k, 8]
            deta = dx * E[k, 9] + dz * E[k, 10]
            a4 = 4.0 * E[k, 11]
            A = dxi * dxi
            B = 2.0 * xi * dxi - a4 * deta
            C = xi * xi - a4 * eta
            lin = A == 0.0
            if lin:
                if pas == 1:
                    continue
                r = -C / B
            else:
                disc = B * B - 4.0 * A * C
                if disc < 0.0:
                    continue
                sq = sqrt(disc)
                q = -0.5 * (B + copysign(sq, B))
                if pas == 0:
                    r = q / A
                else:
                    r = C / q
            if not isfinite(r) or not r > smin:
                continue
            t = xi + r * dxi
            if t >= E[k, 12] - PARAM_TOL and t <= E[k, 13] + PARAM_TOL and r < best_s[0]:
                best_s[0] = r
                best_k[0] = k


cdef inline double _refine_arc(const double[:, ::1] E, Py_ssize_t k, double ox, double oz,
                               double dx, double dz, double s) noexcept nogil:
    cdef double px = ox + s * dx, pz = oz + s * dz
    cdef double wx = px - E[k, 5], wz = pz - E[k, 6]
    cdef double xi = wx * E[k, 7] + wz * E[k, 8]
    cdef double eta = wx * E[k, 9] + wz * E[k, 10]
    cdef double dxi = dx * E[k, 7] + dz * E[k, 8]
    cdef double deta = dx * E[k, 9] + dz * E[k, 10]
    cdef double a4 = 4.0 * E[k, 11]
    cdef double A = dxi * dxi
    cdef double B = 2.0 * xi * dxi - a4 * deta
    cdef double C = xi * xi - a4 * eta
    cdef double disc, q, r, r1, r2
    if A == 0.0:
        r = -C / B if B != 0.0 else 0.0
    else:
        disc = B * B - 4.0 * A * C
        if disc < 0.0:
            return s
        q = -0.5 * (B + copysign(sqrt(disc), B))
        r1 = q / A
        r2 = C / q if q != 0.0 else r1
        r = r1 if fabs(r1) < fabs(r2) else r2
    if isfinite(r) and fabs(r) < REFINE_MAX:
        return s + r
    return s


cdef inline int _corner(const double[:, ::1] E, const long long[::1] prev,
                        const long long[::1] nxt, Py_ssize_t k,
                        double px, double pz, double dx, double dz) noexcept nogil:
    """0 regular, 1 graze, 2 singular."""
    cdef double ds, de, tix, tiz, tox, toz, c, da, db
    cdef long long ka, kb
    cdef bint enters
    ds = hypot(px - E[k, 1], pz - E[k, 2])
    de = hypot(px - E[k, 3], pz - E[k, 4])
    if ds >= JUNCTION_TOL and de >= JUNCTION_TOL:
        return 0
    if ds <= de:
        ka = prev[k]
        kb = k
    else:
        ka = k
        kb = nxt[k]
    if ka < 0 or kb < 0:
        return 2
    tix = E[ka, 16]
    tiz = E[ka, 17]
    tox = E[kb, 14]
    toz = E[kb, 15]
    c = tix * toz - tiz * tox
    if fabs(c) < TANGENT_TOL and tix * tox + tiz * toz > 0.0:
        return 0
    da = dx * -tiz + dz * tix
    db = dx * -toz + dz * tox
    if c < 0.0:
        enters = da < 0.0 and db < 0.0
    else:
        enters = da < 0.0 or db < 0.0
    return 2 if enters else 1


cdef int _trace_one(const double[:, ::1] E, const long long[::1] prev,
                    const long long[::1] nxt, Py_ssize_t n, double x, double z0,
                    long long cap, double* out_vx, double* out_vz,
                    long long* out_b) noexcept nogil:
    cdef double ox = x, oz = z0, dx = 0.0, dz = -1.0, smin = FWD_EPS
    cdef double s, px, pz, tx, tz, t, kk, nn, nx, nz, vn
    cdef Py_ssize_t k
    cdef long long bounces = 0
    cdef int action, status
    while True:
        _nearest(E, n, ox, oz, dx, dz, smin, &s, &k)
        if k < 0:
            status = 0 if bounces > 0 else 1
            break
        if bounces >= cap:
            status = 2
            break
        if E[k, 0] == 1.0:
            s = _refine_arc(E, k, ox, oz, dx, dz, s)
        px = ox + s * dx
        pz = oz + s * dz
        action = _corner(E, prev, nxt, k, px, pz, dx, dz)
        if action == 2:
            status = 3
            break
        if action == 1:
            ox = px
            oz = pz
            smin = GRAZE_EPS
            continue
        if E[k, 0] == 0.0:
            tx = E[k, 3] - E[k, 1]
            tz = E[k, 4] - E[k, 2]
        else:
            t = (px - E[k, 5]) * E[k, 7] + (pz - E[k, 6]) * E[k, 8]
            kk = t / (2.0 * E[k, 11])
            tx = E[k, 7] + kk * E[k, 9]
            tz = E[k, 8] + kk * E[k, 10]
        nn = hypot(tx, tz)
        nx = -tz / nn
        nz = tx / nn
        vn = dx * nx + dz * nz
        if fabs(vn) < TANGENT_TOL:
            status = 3
            break
        dx = dx - 2.0 * vn * nx
        dz = dz - 2.0 * vn * nz
        nn = hypot(dx, dz)
        dx = dx / nn
        dz = dz / nn
        bounces += 1
        ox = px
        oz = pz
        smin = FWD_EPS
    out_vx[0] = dx
    out_vz[0] = dz
    out_b[0] = bounces
    return status


def trace_many(const double[:, ::1] rows, const long long[::1] prev,
               const long long[::1] nxt, xs, double z0, long long cap, int threads=1):
    """Trace downward vertical rays at every abscissa of ``xs``.

    Returns ``(vx, vz, bounces, status)`` arrays.  Rays are independent, so the
    loop runs in parallel over ``threads`` OpenMP workers.
    """
    cdef const double[::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
    cdef Py_ssize_t m = xv.shape[0], n = rows.shape[0], i
    vx_a = np.empty(m)
    vz_a = np.empty(m)
    b_a = np.empty(m, dtype=np.int64)
    st_a = np.empty(m, dtype=np.int64)
    cdef double[::1] vx = vx_a, vz = vz_a
    cdef long long[::1] b = b_a, st = st_a
    if threads < 1:
        threads = 1
    for i in prange(m, nogil=True, num_threads=threads, schedule="dynamic", chunksize=16):
        st[i] = _trace_one(rows, prev, nxt, n, xv[i], z0, cap, &vx[i], &vz[i], &b[i])
    return vx_a, vz_a, b_a, st_a
