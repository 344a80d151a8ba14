"""Convex hulls of bodies and resistance under the modified reflection law."""

from __future__ import annotations

import numpy as np

from .._hull import upper_hull
from ..errors import DomainError
from .geometry import Body2D, GeneratorCurve, ParabolicArc, Segment, polyline_body

TURN_TOL = 1e-12


def _turns_right(t_in, t_out):
    return t_in[0] * t_out[1] - t_in[1] * t_out[0] <= TURN_TOL


def is_convex(body: Body2D) -> bool:
    """True when the closed boundary turns clockwise everywhere."""
    if not body.closed:
        return False
    loop = body.loop
    for e in loop:
        # t increasing turns counterclockwise, so convex arcs run with t decreasing
        if isinstance(e, ParabolicArc) and e.t_range[1] > e.t_range[0]:
            return False
    for i, e in enumerate(loop):
        nxt = loop[(i + 1) % len(loop)]
        if not _turns_right(e.tangent(at_end=True), nxt.tangent()):
            return False
    return True


def _upper_points(body, arc_samples=65):
    pts = []
    for e in body.upper:
        pts.append(e.sample(2 if isinstance(e, Segment) else arc_samples))
    pts = np.vstack(pts)
    # keep the highest point for each abscissa
    order = np.lexsort((-pts[:, 1], pts[:, 0]))
    pts = pts[order]
    first = np.concatenate([[True], np.diff(pts[:, 0]) != 0.0])
    return pts[first]


def convex_hull(body: Body2D) -> Body2D:
    """Convex hull of the body's closed region, returned as a polyline body.

    Bodies that are already convex are returned unchanged.
    """
    if is_convex(body):
        return body
    pts = _upper_points(body)
    idx = upper_hull(pts[:, 0], pts[:, 1])
    hx, hz = pts[idx, 0], pts[idx, 1]
    if body.symmetric:
        # the point set is mirror symmetric; keep the right half
        z0 = float(np.interp(0.0, hx, hz))
        right = hx > 0.0
        hx = np.concatenate([[0.0], hx[right]])
        hz = np.concatenate([[z0], hz[right]])
    return polyline_body(hx, hz, h=body.height, symmetric=body.symmetric)


class ConvexProfile:
    """Upper boundary ``z = f_G(x)`` of a convex polyline body, as an even function."""

    def __init__(self, body: Body2D):
        if not is_convex(body) or any(isinstance(e, ParabolicArc) for e in body.curve):
            raise DomainError("profile accessor needs a convex polyline body")
        pts = np.array([body.curve[0].start] + [e.end for e in body.curve])
        self.xs, self.zs = pts[:, 0], pts[:, 1]
        self.symmetric = body.symmetric

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        xe = np.abs(x) if self.symmetric else x
        return np.interp(xe, self.xs, self.zs)

    def slope(self, x):
        """Right derivative for ``x >= 0`` (either side is valid off the kinks)."""
        x = np.asarray(x, dtype=float)
        s = np.diff(self.zs) / np.diff(self.xs)
        k = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, len(s) - 1)
        return s[k]

    @property
    def slopes(self):
        return np.diff(self.zs) / np.diff(self.xs)


def _element_modified(e, nodes, weights):
    if isinstance(e, Segment):
        (x0, z0), (x1, z1) = e.p0, e.p1
        if x1 <= x0:
            return 0.0
        q = (z1 - z0) / (x1 - x0)
        g = 1.0 - abs(q) / np.sqrt(1.0 + q * q)
        # int |x| dx over [x0, x1]
        w = 0.5 * (np.sign(x1) * x1 * x1 - np.sign(x0) * x0 * x0)
        return g * w
    t0, t1 = e.t_range
    edges = np.linspace(t0, t1, 5)
    total = 0.0
    (e1x, e1z), (e2x, e2z), a = e.e1, e.e2, e.a
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        t = lo + half + half * nodes
        tx = e1x + t / (2 * a) * e2x
        tz = e1z + t / (2 * a) * e2z
        x = e.point(t)[:, 0]
        g = 1.0 - np.abs(tz) / np.hypot(tx, tz)
        total += float(np.sum(weights * g * np.abs(x) * tx) * half)
    return max(total, 0.0)


def modified_resistance(body: Body2D) -> float:
    """``int_0^1 (1 + f'/sqrt(1 + f'^2)) x dx`` over the upper boundary of a convex body."""
    if not is_convex(body):
        raise DomainError("modified resistance is defined for convex bodies only")
    nodes, weights = np.polynomial.legendre.leggauss(32)
    if body.symmetric:
        return float(sum(_element_modified(e, nodes, weights) for e in body.curve))
    return 0.5 * float(sum(_element_modified(e, nodes, weights) for e in body.upper))


def profile_body(solution, n=1000) -> Body2D:
    """Polyline body whose upper boundary is ``h - f_h(x)`` of a solved profile."""
    h = solution.h
    x0 = solution.x0
    xs = np.concatenate([[0.0], x0 + (1.0 - x0) * np.linspace(0.0, 1.0, n + 1)])
    if x0 <= 0.0 or x0 >= 1.0:
        xs = np.linspace(0.0, 1.0, n + 1)
    zs = h - np.asarray(solution.profile(xs))
    zs[-1] = max(zs[-1], 0.0) if abs(zs[-1]) > 1e-12 else 0.0
    return polyline_body(xs, zs, h=h)


def triangle_body(h=1.0):
    return Body2D(h, GeneratorCurve([Segment((0.0, h), (1.0, 0.0))]))
