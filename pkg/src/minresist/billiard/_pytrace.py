"""Reference ray tracer in Python/numpy.

Used when the compiled extension is unavailable and as the source of truth for
single-ray traces with a recorded hit chain.  The compiled tracer follows the
same algorithm step for step.
"""

import math

import numpy as np

EXITED, NO_HIT, CAP_EXCEEDED, SINGULAR = 0, 1, 2, 3

FWD_EPS = 1e-12       # forward parameter threshold after a reflection
GRAZE_EPS = 1e-9      # forward threshold after passing a corner
JUNCTION_TOL = 1e-9
TANGENT_TOL = 1e-12
PARAM_TOL = 1e-12
REFINE_MAX = 1e-9     # largest correction accepted from the hit-point re-solve


class Scene:
    """Element arrays split by kind for vectorized intersection."""

    def __init__(self, rows, prev, nxt):
        self.rows = rows
        self.prev = prev
        self.nxt = nxt
        kind = rows[:, 0]
        self.seg = np.flatnonzero(kind == 0)
        self.arc = np.flatnonzero(kind == 1)
        s = rows[self.seg]
        self.sax, self.saz = s[:, 1], s[:, 2]
        self.sex, self.sez = s[:, 3] - s[:, 1], s[:, 4] - s[:, 2]
        r = rows[self.arc]
        self.vx, self.vz = r[:, 5], r[:, 6]
        self.e1x, self.e1z, self.e2x, self.e2z = r[:, 7], r[:, 8], r[:, 9], r[:, 10]
        self.a4 = 4.0 * r[:, 11]
        self.tmin, self.tmax = r[:, 12], r[:, 13]

    def nearest(self, ox, oz, dx, dz, smin):
        best_s, best_k = math.inf, -1
        if len(self.seg):
            with np.errstate(divide="ignore", invalid="ignore"):
                denom = dx * self.sez - dz * self.sex
                wx, wz = self.sax - ox, self.saz - oz
                s = (wx * self.sez - wz * self.sex) / denom
                u = (wx * dz - wz * dx) / denom
            ok = (denom != 0.0) & (s > smin) & (u >= -PARAM_TOL) & (u <= 1.0 + PARAM_TOL)
            if ok.any():
                j = np.flatnonzero(ok)
                m = j[np.argmin(s[j])]
                best_s, best_k = float(s[m]), int(self.seg[m])
        if len(self.arc):
            wx, wz = ox - self.vx, oz - self.vz
            xi = wx * self.e1x + wz * self.e1z
            eta = wx * self.e2x + wz * self.e2z
            dxi = dx * self.e1x + dz * self.e1z
            deta = dx * self.e2x + dz * self.e2z
            A = dxi * dxi
            B = 2.0 * xi * dxi - self.a4 * deta
            C = xi * xi - self.a4 * eta
            with np.errstate(divide="ignore", invalid="ignore"):
                disc = B * B - 4.0 * A * C
                sq = np.sqrt(disc)
                q = -0.5 * (B + np.copysign(sq, B))
                lin = A == 0.0
                r1 = np.where(lin, -C / B, q / A)
                r2 = np.where(lin, np.nan, C / q)
            for r in (r1, r2):
                t = xi + r * dxi
                ok = ((lin | (disc >= 0.0)) & np.isfinite(r) & (r > smin)
                      & (t >= self.tmin - PARAM_TOL) & (t <= self.tmax + PARAM_TOL))
                if ok.any():
                    j = np.flatnonzero(ok)
                    m = j[np.argmin(r[j])]
                    if r[m] < best_s:
                        best_s, best_k = float(r[m]), int(self.arc[m])
        return best_s, best_k


def refine_arc(row, ox, oz, dx, dz, s):
    """Polish an arc hit parameter by re-solving from the first-pass hit point.

    Far from the arc both roots of the quadratic are close to ``s`` when the
    focal length is small, so the discriminant cancels; from the hit point
    itself the local quadratic is well scaled.
    """
    px, pz = ox + s * dx, oz + s * dz
    wx, wz = px - row[5], pz - row[6]
    xi = wx * row[7] + wz * row[8]
    eta = wx * row[9] + wz * row[10]
    dxi = dx * row[7] + dz * row[8]
    deta = dx * row[9] + dz * row[10]
    a4 = 4.0 * row[11]
    A = dxi * dxi
    B = 2.0 * xi * dxi - a4 * deta
    C = xi * xi - a4 * eta
    if A == 0.0:
        r = -C / B if B != 0.0 else 0.0
    else:
        disc = B * B - 4.0 * A * C
        if disc < 0.0:
            return s
        q = -0.5 * (B + math.copysign(math.sqrt(disc), B))
        r1 = q / A
        r2 = C / q if q != 0.0 else r1
        r = r1 if abs(r1) < abs(r2) else r2
    if math.isfinite(r) and abs(r) < REFINE_MAX:
        return s + r
    return s


def normal_at(row, px, pz):
    """Unit normal of element ``row`` at a point (orientation irrelevant for reflection)."""
    if row[0] == 0:
        tx, tz = row[3] - row[1], row[4] - row[2]
    else:
        t = (px - row[5]) * row[7] + (pz - row[6]) * row[8]
        k = t / (2.0 * row[11])
        tx, tz = row[7] + k * row[9], row[8] + k * row[10]
    n = math.hypot(tx, tz)
    return -tz / n, tx / n


def corner_action(rows, prev, nxt, k, px, pz, dx, dz):
    """Classify a hit near an element endpoint.

    Returns ``"regular"`` (no corner or a smooth junction), ``"graze"`` (the
    ray passes the corner outside the body) or ``"singular"``.
    """
    row = rows[k]
    ds = math.hypot(px - row[1], pz - row[2])
    de = math.hypot(px - row[3], pz - row[4])
    if min(ds, de) >= JUNCTION_TOL:
        return "regular"
    if ds <= de:
        ka, kb = int(prev[k]), k
    else:
        ka, kb = k, int(nxt[k])
    if ka < 0 or kb < 0:
        return "singular"
    tix, tiz = rows[ka, 16], rows[ka, 17]
    tox, toz = rows[kb, 14], rows[kb, 15]
    c = tix * toz - tiz * tox
    if abs(c) < TANGENT_TOL and tix * tox + tiz * toz > 0.0:
        return "regular"
    da = dx * -tiz + dz * tix
    db = dx * -toz + dz * tox
    if c < 0.0:
        enters = da < 0.0 and db < 0.0
    else:
        enters = da < 0.0 or db < 0.0
    return "singular" if enters else "graze"


def trace_path(scene, x, z0, cap, record=False):
    """Trace the downward vertical ray at abscissa ``x``.

    Returns ``(vx, vz, bounces, status, hits)``.
    """
    rows, prev, nxt = scene.rows, scene.prev, scene.nxt
    ox, oz, dx, dz = float(x), float(z0), 0.0, -1.0
    bounces, smin = 0, FWD_EPS
    hits = []
    while True:
        s, k = scene.nearest(ox, oz, dx, dz, smin)
        if k < 0:
            return dx, dz, bounces, (EXITED if bounces else NO_HIT), hits
        if bounces >= cap:
            return dx, dz, bounces, CAP_EXCEEDED, hits
        if rows[k, 0] == 1:
            s = refine_arc(rows[k], ox, oz, dx, dz, s)
        px, pz = ox + s * dx, oz + s * dz
        action = corner_action(rows, prev, nxt, k, px, pz, dx, dz)
        if action == "singular":
            return dx, dz, bounces, SINGULAR, hits
        if action == "graze":
            ox, oz, smin = px, pz, GRAZE_EPS
            continue
        nx, nz = normal_at(rows[k], px, pz)
        vn = dx * nx + dz * nz
        if abs(vn) < TANGENT_TOL:
            return dx, dz, bounces, SINGULAR, hits
        dx, dz = dx - 2.0 * vn * nx, dz - 2.0 * vn * nz
        nrm = math.hypot(dx, dz)
        dx, dz = dx / nrm, dz / nrm
        bounces += 1
        if record:
            hits.append(((px, pz), k))
        ox, oz, smin = px, pz, FWD_EPS


def trace_many(rows, prev, nxt, xs, z0, cap, threads=1):
    scene = Scene(rows, prev, nxt)
    n = len(xs)
    vx = np.empty(n)
    vz = np.empty(n)
    bounces = np.empty(n, dtype=np.int64)
    status = np.empty(n, dtype=np.int64)
    for i in range(n):
        vx[i], vz[i], bounces[i], status[i], _ = trace_path(scene, xs[i], z0, cap)
    return vx, vz, bounces, status
