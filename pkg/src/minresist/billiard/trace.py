"""Vertical billiard rays: single traces with hit chains and batched traces.

The batch tracer is the compiled extension when it is importable and
``MINRESIST_PURE`` is unset; otherwise the numpy implementation is used.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from . import _pytrace

try:
    if os.environ.get("MINRESIST_PURE"):
        raise ImportError("pure backend requested")
    from . import _ctrace
except ImportError:
    _ctrace = None

BACKEND = "compiled" if _ctrace is not None else "python"

STATUS_NAMES = ("exited", "no_hit", "cap_exceeded", "singular_hit")
EXITED, NO_HIT, CAP_EXCEEDED, SINGULAR = range(4)
DEFAULT_CAP = 1000


def default_threads():
    env = os.environ.get("RESIST_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def reflect(v, n):
    """Elastic reflection ``v - 2 (v.n) n`` of velocity ``v`` off a surface with unit normal ``n``."""
    vx, vz = v
    nx, nz = n
    d = vx * nx + vz * nz
    return (vx - 2.0 * d * nx, vz - 2.0 * d * nz)


def segment_normal(p0, p1):
    tx, tz = p1[0] - p0[0], p1[1] - p0[1]
    r = math.hypot(tx, tz)
    return (-tz / r, tx / r)


@dataclass(frozen=True)
class TraceResult:
    exit_velocity: tuple
    bounces: int
    hits: tuple
    status: str

    @property
    def vz(self):
        return self.exit_velocity[1]


def start_height(body):
    return body.height + 1.0


def trace(body, x, cap=DEFAULT_CAP):
    """Follow the vertical ray falling at abscissa ``x`` until it escapes."""
    if not -1.0 <= x <= 1.0:
        raise DomainError("ray abscissa must lie in [-1, 1]")
    if cap < 1:
        raise DomainError("bounce cap must be at least 1")
    rows, prev, nxt = body.packed
    scene = _pytrace.Scene(rows, prev, nxt)
    vx, vz, b, st, hits = _pytrace.trace_path(scene, x, start_height(body), cap, record=True)
    return TraceResult((float(vx), float(vz)), int(b), tuple(hits), STATUS_NAMES[st])


def trace_many(body, xs, cap=DEFAULT_CAP, threads=None, backend=None):
    """Trace many rays; returns ``(vx, vz, bounces, status)`` arrays."""
    rows, prev, nxt = body.packed
    xs = np.ascontiguousarray(xs, dtype=float)
    if threads is None:
        threads = default_threads()
    use = backend or BACKEND
    if use == "compiled":
        if _ctrace is None:
            raise DomainError("compiled tracer is not available")
        return _ctrace.trace_many(rows, prev, nxt, xs, start_height(body), int(cap), int(threads))
    return _pytrace.trace_many(rows, prev, nxt, xs, start_height(body), int(cap))
