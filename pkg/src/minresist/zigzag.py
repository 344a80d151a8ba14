"""Minimizing sequences of nonconvex bodies.

``assemble_zigzag`` replaces every chord of a piecewise-affine concave hull by
a cell of two confocal parabolic arcs that sends vertical rays out almost
parallel to the chord, so the billiard resistance approaches the hull's
modified-law resistance as the cell parameter ``delta`` goes to 0.

``chain_body`` builds the single-impact top made of parabolic arcs whose foci
sit at the neighbouring odd nodes at height ``h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .billiard.geometry import Body2D, GeneratorCurve, ParabolicArc, Segment, polyline_body
from .billiard.quadrature import QuadratureSpec, resistance
from .errors import DomainError, ParameterError, RegimeError
from .solver import M_STAR, ProfileSolution

MIN_STRIP = 1e-7


@dataclass(frozen=True)
class PartitionedProfile:
    """Even concave piecewise-affine profile through ``(xs[k], fs[k])`` on ``[0, 1]``."""

    xs: np.ndarray
    fs: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        fs = np.asarray(self.fs, dtype=float)
        if xs.ndim != 1 or xs.shape != fs.shape or len(xs) < 3:
            raise DomainError("a partitioned profile needs at least two segments")
        if xs[0] != 0.0 or abs(xs[-1] - 1.0) > 1e-15 or np.any(np.diff(xs) <= 0):
            raise DomainError("nodes must increase from 0 to 1")
        s = np.diff(fs) / np.diff(xs)
        if np.any(np.diff(s) > 1e-12) or s[0] > 1e-12:
            raise DomainError("profile is not concave and non-increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "fs", fs)

    @property
    def m(self) -> int:
        return len(self.xs) - 1

    @property
    def h(self) -> float:
        return float(self.fs[0])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.fs) / np.diff(self.xs)

    def __call__(self, x):
        return np.interp(np.abs(np.asarray(x, dtype=float)), self.xs, self.fs)

    def slope(self, x):
        k = np.clip(np.searchsorted(self.xs, np.asarray(x, dtype=float), side="right") - 1,
                    0, self.m - 1)
        return self.slopes[k]

    def hull_body(self) -> Body2D:
        return polyline_body(self.xs, self.fs, h=self.h)

    def modified_resistance(self) -> float:
        """Closed form ``sum (1 + s/sqrt(1+s^2)) (x_k^2 - x_{k-1}^2)/2``."""
        s = self.slopes
        return float(np.sum((1.0 + s / np.sqrt(1.0 + s * s)) * np.diff(self.xs ** 2) / 2.0))

    def delta_bound(self):
        """Largest admissible ``delta`` and the constraint that binds it."""
        s = self.slopes
        bounds = {"slope": -s[0],
                  "slope_gap": float(np.min(s[:-1] - s[1:])),
                  "segment_length": float(np.min(np.diff(self.xs)))}
        name = min(bounds, key=bounds.get)
        return bounds[name], name


def _profile_functions(f):
    if isinstance(f, ProfileSolution):
        h = f.h
        return (lambda x: h - np.asarray(f.profile(x))), h, f.x0
    if callable(f):
        return f, float(f(0.0)), 0.0
    raise DomainError("approximate_profile needs a ProfileSolution or a callable")


def approximate_profile(f, m: int, nodes: str = "uniform") -> PartitionedProfile:
    """Piecewise-affine interpolant of a concave top profile with ``m`` segments.

    ``f`` is a :class:`ProfileSolution` (its body top ``h - f_h``) or a
    callable concave top profile on ``[0, 1]``.

    ``nodes="uniform"`` uses ``x_k = k/m``; when the first node would fall on
    the flat disk it is moved to the first ``k/m`` beyond it and the remaining
    segments are spread uniformly.  ``nodes="equislope"`` (solutions only)
    places nodes where the slope crosses equally spaced levels, which makes the
    slope error at most ``(max slope - min slope)/m``.
    """
    if m < 2:
        raise DomainError("need at least two segments")
    top, h, x_flat = _profile_functions(f)
    if nodes == "uniform":
        xs = np.arange(m + 1) / m
        if xs[1] <= x_flat:
            k = int(np.searchsorted(xs, x_flat, side="right"))
            x1 = xs[k] if k < m else 0.5 * (x_flat + 1.0)
            xs = np.concatenate([[0.0], np.linspace(x1, 1.0, m)])
    elif nodes == "equislope":
        if not isinstance(f, ProfileSolution):
            raise DomainError("equislope nodes need a solved profile")
        env, z = f.envelope, f.z
        lo, hi = float(env.u0), float(f.slope(1.0))
        levels = lo + (hi - lo) * np.arange(1, m) / m
        inner = -1.0 / (z * np.asarray(env.slope(levels, side="left")))
        inner = inner[(inner > 0.0) & (inner < 1.0)]
        xs = np.unique(np.concatenate([[0.0], inner, [1.0]]))
        while len(xs) < m + 1:
            k = int(np.argmax(np.diff(xs)))
            xs = np.insert(xs, k + 1, 0.5 * (xs[k] + xs[k + 1]))
    else:
        raise DomainError(f"unknown node rule {nodes!r}")
    fs = np.asarray(top(xs), dtype=float)
    fs[0] = h
    return PartitionedProfile(xs, fs)


@dataclass(frozen=True)
class ZigzagCell:
    """One cell curve from ``P`` to ``P'`` with its named construction points."""

    index: int
    delta: float
    P: tuple
    P1: tuple
    Q: tuple
    S: tuple
    Q_d: tuple
    P_d: tuple
    S_d: tuple
    x_delta: float
    ratio: float
    focal: float
    images: int
    elements: tuple = field(repr=False)

    @property
    def exit_slope(self):
        return (self.P1[1] - self.P[1]) / (self.P1[0] - self.P[0]) + self.delta

    def debug(self) -> dict:
        return {"i": self.index, "P": list(self.P), "P'": list(self.P1), "Q": list(self.Q),
                "S": list(self.S), "Q_delta": list(self.Q_d), "P_delta": list(self.P_d),
                "S_delta": list(self.S_d), "x_delta": self.x_delta,
                "homothety_ratio": self.ratio, "images": self.images,
                "pi_focal_length": self.focal}


def check_delta(pp: PartitionedProfile, delta: float):
    """Raise :class:`ParameterError` naming the first violated bound on ``delta``."""
    if not delta > 0.0:
        raise ParameterError("delta must be positive", constraint="positive")
    s = pp.slopes
    if not delta < -s[0]:
        raise ParameterError(f"delta = {delta} must be below |s_1| = {-s[0]:.6g}",
                             constraint="slope")
    gap = float(np.min(s[:-1] - s[1:]))
    if not delta < gap:
        raise ParameterError(f"delta = {delta} must be below the minimal slope gap {gap:.6g}",
                             constraint="slope_gap")
    length = float(np.min(np.diff(pp.xs)))
    if not delta < length:
        raise ParameterError(
            f"delta = {delta} must be below the shortest segment {length:.6g}",
            constraint="segment_length")


def _cell_pattern(xa, fa, xb, fb, delta):
    """Elements of the basic cell and its construction data."""
    L = xb - xa
    s = (fb - fa) / L
    sig = s + delta
    n = math.hypot(1.0, sig)
    X = xa + delta
    P_d = (X, fa + s * delta)
    S_d = (X, fa + sig * delta)
    a = -s * (L - delta)
    t_l = 2.0 * a * (n + sig)
    x_d = X + t_l
    # vertex of the small arc on l, left of P_delta; shrink until the arc
    # stays clear of the top line P S_delta (parallel to l, offset delta^2/n)
    F = 0.5 * delta * n
    while 2.0 * F * (n + sig) >= 0.5 * delta * delta / n:
        F *= 0.5
    e = (1.0 / n, sig / n)
    V = (P_d[0] - F * e[0], P_d[1] - F * e[1])
    pi_arc = ParabolicArc(V, P_d, (-2.0 * F * (n + sig), 0.0))
    S1 = pi_arc.start
    Q1 = (V[0], fb)
    Q_d = (X, fb)
    els = [Segment((xa, fa), S_d), Segment(S_d, S1), pi_arc,
           Segment(V, Q1), Segment(Q1, Q_d)]
    clipped = x_d >= xb
    t_end = (xb - X) if clipped else t_l
    big = ParabolicArc(Q_d, P_d, (0.0, t_end))
    els.append(big)
    if clipped:
        if big.end[1] > fb:
            els.append(Segment(big.end, (xb, fb)))
    else:
        els.append(Segment(big.end, (x_d, fa + s * (x_d - xa))))
    info = dict(Q=(xa, fb), S=(xb, fa), Q_d=Q_d, P_d=P_d, S_d=S_d, x_delta=x_d, focal=F)
    return els, clipped, info


def _clip_at(e, c):
    """Part of ``e`` before it first reaches ``x = c``, and the reaching point."""
    x0 = e.start[0]
    if x0 >= c:
        return None, e.start
    if isinstance(e, Segment):
        (px, pz), (qx, qz) = e.p0, e.p1
        u = (c - px) / (qx - px)
        point = (c, pz + u * (qz - pz))
        return Segment(e.p0, point), point
    # only arcs whose abscissa grows linearly with t reach the cut
    e1x = e.e1[0]
    if e.e2[0] != 0.0 or e1x == 0.0:
        raise ParameterError("cell cut crosses a tilted arc", constraint="segment_length")
    t = (c - e.vertex[0]) / e1x
    arc = ParabolicArc(e.vertex, e.focus, (e.t_range[0], t))
    return arc, arc.end


def build_cell(pp: PartitionedProfile, i: int, delta: float) -> ZigzagCell:
    """Cell for segment ``i`` (1-based) of ``pp``."""
    if not 1 <= i <= pp.m:
        raise DomainError(f"segment index must be in 1..{pp.m}")
    check_delta(pp, delta)
    xa, fa = float(pp.xs[i - 1]), float(pp.fs[i - 1])
    xb, fb = float(pp.xs[i]), float(pp.fs[i])
    L = xb - xa
    base, clipped, info = _cell_pattern(xa, fa, xb, fb, delta)
    ratio, images = 0.0, 0
    if clipped:
        els = list(base)
    else:
        # repeat the cell under the homothety centred at P' until the curve
        # reaches the strip xb - delta < x <= xb, then close the strip
        ratio = (xb - info["x_delta"]) / L
        cut = xb - max(delta, MIN_STRIP)
        els, scale = [], 1.0
        while True:
            done = False
            for e in base:
                e = e if scale == 1.0 else e.scaled((xb, fb), scale)
                if e.bbox()[2] < cut:
                    els.append(e)
                    continue
                head, point = _clip_at(e, cut)
                if head is not None:
                    els.append(head)
                done = True
                break
            if done:
                break
            images += 1
            scale *= ratio
        if point[1] > fb:
            els.append(Segment(point, (cut, fb)))
        els.append(Segment((cut, fb), (xb, fb)))
    return ZigzagCell(i, float(delta), (xa, fa), (xb, fb), info["Q"], info["S"],
                      info["Q_d"], info["P_d"], info["S_d"], info["x_delta"], ratio,
                      info["focal"], images, tuple(els))


def assemble_zigzag(pp: PartitionedProfile, delta: float) -> Body2D:
    """Symmetric body whose convex hull is the polygon of ``pp``."""
    check_delta(pp, delta)
    cells = [build_cell(pp, i, delta) for i in range(1, pp.m + 1)]
    els = [e for c in cells for e in c.elements]
    meta = {"kind": "zigzag", "delta": float(delta), "segments": pp.m,
            "nodes": pp.xs.tolist(), "values": pp.fs.tolist()}
    return Body2D(pp.h, GeneratorCurve(els), symmetric=True, meta=meta)


def zigzag_cells(pp: PartitionedProfile, delta: float):
    check_delta(pp, delta)
    return [build_cell(pp, i, delta) for i in range(1, pp.m + 1)]


# -- single-impact parabolic chain -------------------------------------------

def chain_nodes(h: float) -> np.ndarray:
    """Default odd nodes ``x_1 = 4h/3, 2 x_1, ...`` strictly below 1."""
    x1 = 4.0 * h / 3.0
    k = np.arange(1, int(math.floor(1.0 / x1)) + 2)
    nodes = k * x1
    nodes = nodes[nodes < 1.0]
    if len(nodes) < 2:
        nodes = np.array([x1, 0.5 * (x1 + 1.0)])
    return nodes


def chain_body(h: float, odd_nodes=None) -> Body2D:
    """Single-impact body: parabolic arcs between odd nodes, chord closure to ``(1, 0)``.

    Between consecutive odd nodes ``x_{2i-1} < x_{2i+1}`` (spacing ``D``) the
    top is ``(x - x_{2i+1})^2/(2D) + h - D/2`` left of the midpoint and
    ``(x - x_{2i-1})^2/(2D) + h - D/2`` right of it, so every arc has its focus
    at the opposite node at height ``h``.  The central pair uses the nodes
    ``-x_1`` and ``x_1``.
    """
    if not 0.0 < h < M_STAR:
        raise RegimeError(f"chain bodies need 0 < h < M* = {M_STAR}; use the solver for h = {h}")
    if odd_nodes is None:
        nodes = chain_nodes(h)
    else:
        nodes = np.asarray(odd_nodes, dtype=float)
        if len(nodes) < 1 or np.any(np.diff(nodes) <= 0) or nodes[0] <= 0 or nodes[-1] >= 1:
            raise DomainError("odd nodes must increase strictly inside (0, 1)")
        if nodes[0] > 4.0 * h / 3.0 + 1e-12 or np.any(np.diff(nodes) > 8.0 * h / 3.0 + 1e-12):
            raise DomainError("node spacing too wide: the chain would dip below z = 0")
    x1 = float(nodes[0])
    els = []
    # central pair: vertex at -x1, covers [0, x1]
    D0 = 2.0 * x1
    els.append(ParabolicArc((-x1, h - D0 / 2.0), (-x1, h), (x1, D0)))
    for lo, hi in zip(nodes[:-1], nodes[1:]):
        D = float(hi - lo)
        y = h - D / 2.0
        els.append(ParabolicArc((hi, y), (hi, h), (-D, -D / 2.0)))
        els.append(ParabolicArc((lo, y), (lo, h), (D / 2.0, D)))
    els.append(Segment(els[-1].end, (1.0, 0.0)))
    meta = {"kind": "chain", "odd_nodes": nodes.tolist()}
    return Body2D(h, GeneratorCurve(els), symmetric=True, meta=meta)


def chain_closed_form(h: float = None, odd_nodes=None) -> float:
    """``(x_{2n-1}^2 - x_1^2)(pi/2 - 2 arctan(1/2))``."""
    nodes = chain_nodes(h) if odd_nodes is None else np.asarray(odd_nodes, dtype=float)
    return float((nodes[-1] ** 2 - nodes[0] ** 2) * (math.pi / 2.0 - 2.0 * math.atan(0.5)))


def chain_resistance(body: Body2D, quad: QuadratureSpec | None = None) -> dict:
    """Billiard integrals of a chain body split into its labelled parts."""
    nodes = body.meta.get("odd_nodes")
    if not nodes:
        raise DomainError("body carries no chain node data")
    x1, xn = float(nodes[0]), float(nodes[-1])
    parts = {"center": resistance(body, quad, interval=(0.0, x1)).value,
             "parabolic": resistance(body, quad, interval=(x1, xn)).value,
             "closure": resistance(body, quad, interval=(xn, 1.0)).value}
    parts["total"] = parts["center"] + parts["parabolic"] + parts["closure"]
    parts["closed_form"] = chain_closed_form(odd_nodes=nodes)
    return parts
