"""Planar generator curves built from segments and parabolic arcs.

Bodies are stored as their upper boundary, traversed left to right.  The
closed boundary used for tracing is clockwise: left wall up, upper boundary,
right wall down, bottom.  With that orientation the outward normal of every
element is the left normal of its traversal tangent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from ..errors import InputError

JUNCTION_TOL = 1e-9

SEGMENT = 0
ARC = 1

# packed element layout, one row per element
# 0 kind | 1-2 start | 3-4 end | 5-6 vertex | 7-8 e1 | 9-10 e2 | 11 a
# 12 tmin | 13 tmax | 14-15 unit tangent at start | 16-17 unit tangent at end
PACK_WIDTH = 18


def _pt(p):
    x, z = p
    return (float(x), float(z))


def _unit(x, z):
    n = math.hypot(x, z)
    return (x / n, z / n)


@dataclass(frozen=True)
class Segment:
    p0: tuple
    p1: tuple

    def __post_init__(self):
        object.__setattr__(self, "p0", _pt(self.p0))
        object.__setattr__(self, "p1", _pt(self.p1))
        if self.p0 == self.p1:
            raise InputError("segment endpoints coincide")

    @property
    def start(self):
        return self.p0

    @property
    def end(self):
        return self.p1

    @property
    def length(self):
        return math.dist(self.p0, self.p1)

    def tangent(self, at_end=False):
        return _unit(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1])

    def reversed(self):
        return Segment(self.p1, self.p0)

    def mirrored(self):
        return Segment((-self.p0[0], self.p0[1]), (-self.p1[0], self.p1[1]))

    def scaled(self, center, ratio):
        cx, cz = center
        return Segment((cx + ratio * (self.p0[0] - cx), cz + ratio * (self.p0[1] - cz)),
                       (cx + ratio * (self.p1[0] - cx), cz + ratio * (self.p1[1] - cz)))

    def sample(self, n=2):
        s = np.linspace(0.0, 1.0, n)
        return np.column_stack([self.p0[0] + s * (self.p1[0] - self.p0[0]),
                                self.p0[1] + s * (self.p1[1] - self.p0[1])])

    def bbox(self):
        xs, zs = (self.p0[0], self.p1[0]), (self.p0[1], self.p1[1])
        return min(xs), min(zs), max(xs), max(zs)

    def pack(self):
        row = np.zeros(PACK_WIDTH)
        row[0] = SEGMENT
        row[1:5] = (*self.p0, *self.p1)
        t = self.tangent()
        row[14:18] = (*t, *t)
        return row

    def to_json(self):
        return {"type": "segment", "from": list(self.p0), "to": list(self.p1)}


@dataclass(frozen=True)
class ParabolicArc:
    """Arc ``t -> vertex + t*e1 + t**2/(4a)*e2`` traversed from ``t_range[0]`` to ``t_range[1]``.

    ``e2`` points from the vertex to the focus, ``a`` is their distance and
    ``e1 = (e2_z, -e2_x)``.
    """

    vertex: tuple
    focus: tuple
    t_range: tuple

    def __post_init__(self):
        object.__setattr__(self, "vertex", _pt(self.vertex))
        object.__setattr__(self, "focus", _pt(self.focus))
        object.__setattr__(self, "t_range", _pt(self.t_range))
        if self.a <= 0.0:
            raise InputError("parabolic arc focus must differ from its vertex")

    @property
    def a(self):
        return math.dist(self.vertex, self.focus)

    @property
    def e2(self):
        return _unit(self.focus[0] - self.vertex[0], self.focus[1] - self.vertex[1])

    @property
    def e1(self):
        e2 = self.e2
        return (e2[1], -e2[0])

    def point(self, t):
        t = np.asarray(t, dtype=float)
        (vx, vz), (e1x, e1z), (e2x, e2z) = self.vertex, self.e1, self.e2
        q = t * t / (4.0 * self.a)
        out = np.stack([vx + t * e1x + q * e2x, vz + t * e1z + q * e2z], axis=-1)
        return out

    @property
    def start(self):
        return tuple(self.point(self.t_range[0]).tolist())

    @property
    def end(self):
        return tuple(self.point(self.t_range[1]).tolist())

    def tangent(self, at_end=False):
        t = self.t_range[1] if at_end else self.t_range[0]
        sgn = 1.0 if self.t_range[1] >= self.t_range[0] else -1.0
        (e1x, e1z), (e2x, e2z) = self.e1, self.e2
        k = t / (2.0 * self.a)
        return _unit(sgn * (e1x + k * e2x), sgn * (e1z + k * e2z))

    def reversed(self):
        return ParabolicArc(self.vertex, self.focus, (self.t_range[1], self.t_range[0]))

    def mirrored(self):
        # the mirror image of the point at t is the mirrored arc's point at -t
        return ParabolicArc((-self.vertex[0], self.vertex[1]), (-self.focus[0], self.focus[1]),
                            (-self.t_range[0], -self.t_range[1]))

    def scaled(self, center, ratio):
        cx, cz = center

        def m(p):
            return (cx + ratio * (p[0] - cx), cz + ratio * (p[1] - cz))

        return ParabolicArc(m(self.vertex), m(self.focus),
                            (ratio * self.t_range[0], ratio * self.t_range[1]))

    def sample(self, n=33):
        return self.point(np.linspace(self.t_range[0], self.t_range[1], n))

    def bbox(self):
        t0, t1 = sorted(self.t_range)
        ts = [t0, t1]
        (e1x, e1z), (e2x, e2z) = self.e1, self.e2
        for e1c, e2c in ((e1x, e2x), (e1z, e2z)):
            if e2c != 0.0:
                tc = -2.0 * self.a * e1c / e2c
                if t0 < tc < t1:
                    ts.append(tc)
        pts = self.point(np.asarray(ts))
        return pts[:, 0].min(), pts[:, 1].min(), pts[:, 0].max(), pts[:, 1].max()

    def pack(self):
        row = np.zeros(PACK_WIDTH)
        row[0] = ARC
        row[1:5] = (*self.start, *self.end)
        row[5:7] = self.vertex
        row[7:9] = self.e1
        row[9:11] = self.e2
        row[11] = self.a
        row[12:14] = sorted(self.t_range)
        row[14:16] = self.tangent()
        row[16:18] = self.tangent(at_end=True)
        return row

    def to_json(self):
        return {"type": "parabolic_arc", "vertex": list(self.vertex),
                "focus": list(self.focus), "t_range": list(self.t_range)}


def element_from_json(doc):
    try:
        kind = doc["type"]
        if kind == "segment":
            return Segment(doc["from"], doc["to"])
        if kind == "parabolic_arc":
            return ParabolicArc(doc["vertex"], doc["focus"], doc["t_range"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed body element {doc!r}: {exc}") from exc
    raise InputError(f"unknown element type {kind!r}")


@dataclass(frozen=True)
class GeneratorCurve:
    """Ordered chain of elements whose consecutive endpoints coincide."""

    elements: tuple

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i):
        return self.elements[i]

    @property
    def start(self):
        return self.elements[0].start

    @property
    def end(self):
        return self.elements[-1].end

    def reversed(self):
        return GeneratorCurve(e.reversed() for e in reversed(self.elements))

    def mirrored(self):
        return GeneratorCurve(e.mirrored() for e in self.elements)


def _seg_intersect(p, q, r, s):
    """True when closed segments pq and rs share a point."""
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(r, s, p), orient(r, s, q)
    d3, d4 = orient(p, q, r), orient(p, q, s)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 and d2 and d3 and d4:
        return True

    def on(a, b, c, d):
        return d == 0 and min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) \
            and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    return on(r, s, p, d1) or on(r, s, q, d2) or on(p, q, r, d3) or on(p, q, s, d4)


@dataclass(frozen=True)
class Body2D:
    """Central cross-section of a body inscribed in ``[-1, 1] x [0, h]``.

    ``curve`` is the upper boundary traversed left to right.  When
    ``symmetric`` it covers ``x in [0, 1]`` only and is mirrored.  When
    ``closed`` the lateral walls and the bottom are added as reflecting
    elements; an open body consists of its curve alone.
    """

    height: float
    curve: GeneratorCurve
    symmetric: bool = True
    closed: bool = True
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.curve, GeneratorCurve):
            object.__setattr__(self, "curve", GeneratorCurve(self.curve))
        object.__setattr__(self, "height", float(self.height))
        if len(self.curve) == 0:
            raise InputError("body curve has no elements")

    @cached_property
    def upper(self):
        """Full upper boundary over ``[-1, 1]``, left to right."""
        if not self.symmetric:
            return self.curve.elements
        left = self.curve.mirrored().reversed().elements
        return left + self.curve.elements

    @cached_property
    def loop(self):
        """Elements used for tracing, in clockwise order."""
        upper = self.upper
        if not self.closed:
            return upper
        (xl, zl), (xr, zr) = upper[0].start, upper[-1].end
        extra_l = [Segment((xl, 0.0), (xl, zl))] if zl > 0.0 else []
        extra_r = [Segment((xr, zr), (xr, 0.0))] if zr > 0.0 else []
        bottom = [Segment((xr, 0.0), (xl, 0.0))]
        return tuple(extra_l) + upper + tuple(extra_r) + tuple(bottom)

    @cached_property
    def packed(self):
        """``(rows, prev, next)`` arrays consumed by the ray tracers."""
        loop = self.loop
        rows = np.ascontiguousarray(np.vstack([e.pack() for e in loop]))
        n = len(loop)
        idx = np.arange(n, dtype=np.int64)
        prev, nxt = idx - 1, idx + 1
        if self.closed:
            prev[0], nxt[-1] = n - 1, 0
        else:
            nxt[-1] = -1
        return rows, np.ascontiguousarray(prev), np.ascontiguousarray(nxt)

    @property
    def n_elements(self):
        return len(self.loop)

    def breakpoints(self):
        """Sorted abscissas in ``[0, 1]`` of all element endpoints."""
        rows = self.packed[0]
        xs = np.abs(np.concatenate([rows[:, 1], rows[:, 3]]))
        xs = xs[(xs > 0.0) & (xs < 1.0)]
        return np.unique(xs)

    # -- validation ----------------------------------------------------------

    def validate(self, tol=JUNCTION_TOL):
        """Raise :class:`InputError` if the body breaks an invariant."""
        h = self.height
        els = self.curve.elements
        if not h > 0:
            raise InputError("body height must be positive")
        for i in range(len(els) - 1):
            if math.dist(els[i].end, els[i + 1].start) > tol:
                raise InputError(f"elements {i} and {i + 1} do not share an endpoint")
        x_first = 0.0 if self.symmetric else -1.0
        if abs(els[0].start[0] - x_first) > tol or abs(els[-1].end[0] - 1.0) > tol:
            raise InputError(f"curve must run from x = {x_first:g} to x = 1")
        boxes = np.array([e.bbox() for e in self.loop])
        if (boxes[:, 0].min() < -1 - tol or boxes[:, 2].max() > 1 + tol
                or boxes[:, 1].min() < -tol or boxes[:, 3].max() > h + tol):
            raise InputError("body leaves the rectangle [-1, 1] x [0, h]")
        if self.closed and abs(boxes[:, 3].max() - h) > tol:
            raise InputError("body does not reach the height h")
        bad = self.self_intersections()
        if bad:
            raise InputError(f"curve self-intersects between elements {bad[0]}")
        return self

    def self_intersections(self, pieces=8):
        loop = self.loop
        n = len(loop)
        boxes = np.array([e.bbox() for e in loop])
        pad = 1e-12
        overlap = ((boxes[:, None, 0] <= boxes[None, :, 2] + pad)
                   & (boxes[None, :, 0] <= boxes[:, None, 2] + pad)
                   & (boxes[:, None, 1] <= boxes[None, :, 3] + pad)
                   & (boxes[None, :, 1] <= boxes[:, None, 3] + pad))
        ii, jj = np.nonzero(np.triu(overlap, 2))
        polys = {}

        def poly(k):
            if k not in polys:
                e = loop[k]
                polys[k] = e.sample(2 if isinstance(e, Segment) else pieces + 1)
            return polys[k]

        found = []
        for i, j in zip(ii.tolist(), jj.tolist()):
            if self.closed and i == 0 and j == n - 1:
                continue
            pa, pb = poly(i), poly(j)
            hit = False
            for u in range(len(pa) - 1):
                for v in range(len(pb) - 1):
                    if _seg_intersect(pa[u], pa[u + 1], pb[v], pb[v + 1]):
                        hit = True
                        break
                if hit:
                    break
            if hit:
                found.append((i, j))
        return found

    # -- serialization -------------------------------------------------------

    def to_json(self):
        doc = {"height": self.height, "symmetric": self.symmetric,
               "elements": [e.to_json() for e in self.curve]}
        if not self.closed:
            doc["closed"] = False
        if self.meta:
            doc["meta"] = self.meta
        return doc

    def dumps(self):
        return json.dumps(self.to_json(), indent=1)

    def save(self, path):
        Path(path).write_text(self.dumps() + "\n")

    @classmethod
    def from_json(cls, source, validate=True):
        """Build a body from a dict, a JSON string or a file path."""
        if isinstance(source, dict):
            doc = source
        else:
            text = str(source)
            try:
                if not text.lstrip().startswith("{"):
                    text = Path(text).read_text()
                doc = json.loads(text)
            except (OSError, json.JSONDecodeError) as exc:
                raise InputError(f"cannot read body: {exc}") from exc
        try:
            h = float(doc["height"])
            elements = [element_from_json(e) for e in doc["elements"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed body document: {exc}") from exc
        body = cls(h, GeneratorCurve(elements), bool(doc.get("symmetric", True)),
                   bool(doc.get("closed", True)), dict(doc.get("meta", {})))
        return body.validate() if validate else body


def flat_top_body(h=1.0):
    return Body2D(h, [Segment((0.0, h), (1.0, h))])


def polyline_body(xs, zs, h=None, symmetric=True):
    """Body whose upper boundary is the polyline through ``(xs, zs)``."""
    xs = np.asarray(xs, dtype=float)
    zs = np.asarray(zs, dtype=float)
    if h is None:
        h = float(zs.max())
    els = [Segment((xs[k], zs[k]), (xs[k + 1], zs[k + 1])) for k in range(len(xs) - 1)
           if xs[k] != xs[k + 1] or zs[k] != zs[k + 1]]
    return Body2D(h, GeneratorCurve(els), symmetric=symmetric)
