"""Billiard resistance ``int_0^1 (1 + v^z(x)) x dx`` by adaptive Gauss-Legendre."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import RegularityError
from .trace import CAP_EXCEEDED, DEFAULT_CAP, SINGULAR, trace_many


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre settings.

    Panels start uniform and are split at every element endpoint, so the
    integrand is smooth inside most panels; a panel is halved while its
    one-panel and two-half estimates differ by more than ``tol``.
    """

    panels: int = 256
    nodes: int = 8
    tol: float = 1e-8
    max_panels: int = 2 ** 14
    nudge: float = 1e-7
    cap: int = DEFAULT_CAP
    max_bad_fraction: float = 1e-3
    threads: int | None = None
    backend: str | None = None


@dataclass(frozen=True)
class ResistanceResult:
    value: float
    error: float
    rays: int
    panels: int
    singular: int
    cap_exceeded: tuple

    def __float__(self):
        return self.value


class _Integrand:
    def __init__(self, body, spec):
        self.body = body
        self.spec = spec
        self.rays = 0
        self.singular = 0
        self.cap_xs = []

    def _vz(self, xs):
        s = self.spec
        _, vz, _, st = trace_many(self.body, xs, cap=s.cap, threads=s.threads, backend=s.backend)
        self.rays += len(xs)
        cap = st == CAP_EXCEEDED
        if cap.any():
            self.cap_xs.extend(xs[cap].tolist())
        sing = np.flatnonzero(st == SINGULAR)
        if len(sing):
            self.singular += len(sing)
            vz[sing] = self._resample(xs[sing])
        return vz

    def _resample(self, xs):
        s = self.spec
        out = np.zeros(len(xs))
        todo = np.arange(len(xs))
        for step in (s.nudge, 10 * s.nudge, 100 * s.nudge):
            if not len(todo):
                break
            pts = np.concatenate([xs[todo] - step, xs[todo] + step])
            pts = np.clip(pts, -1.0, 1.0)
            _, vz, _, st = trace_many(self.body, pts, cap=s.cap, threads=s.threads,
                                      backend=s.backend)
            self.rays += len(pts)
            k = len(todo)
            good = st != SINGULAR
            lo_ok, hi_ok = good[:k], good[k:]
            both = lo_ok & hi_ok
            one = lo_ok ^ hi_ok
            val = np.where(both, 0.5 * (vz[:k] + vz[k:]), np.where(lo_ok, vz[:k], vz[k:]))
            done = both | one
            out[todo[done]] = val[done]
            todo = todo[~done]
        return out

    def __call__(self, xs):
        if self.body.symmetric:
            return (1.0 + self._vz(xs)) * xs
        both = self._vz(np.concatenate([xs, -xs]))
        n = len(xs)
        return (1.0 + 0.5 * (both[:n] + both[n:])) * xs


def panel_edges(body, panels, lo=0.0, hi=1.0):
    bp = body.breakpoints()
    bp = bp[(bp > lo) & (bp < hi)]
    edges = np.union1d(np.linspace(lo, hi, panels + 1), bp)
    keep = np.concatenate([[True], np.diff(edges) > 1e-13])
    edges = edges[keep]
    edges[-1] = hi
    return edges


def resistance(body, quad: QuadratureSpec | None = None, interval=None) -> ResistanceResult:
    """Billiard resistance of ``body`` with an error estimate.

    ``interval=(lo, hi)`` restricts the integral to ``lo <= x <= hi``.

    Singular rays (corners, tangencies) are replaced by the average of rays
    nudged by ``+-quad.nudge``.  More than ``quad.max_bad_fraction`` rays over
    the bounce cap raise :class:`RegularityError`.
    """
    spec = quad or QuadratureSpec()
    g = _Integrand(body, spec)
    t, w = np.polynomial.legendre.leggauss(spec.nodes)
    lo, hi = interval if interval is not None else (0.0, 1.0)
    edges = panel_edges(body, spec.panels, lo, hi)
    a, b = edges[:-1], edges[1:]
    whole = np.full(len(a), np.nan)
    total, err, n_accepted = 0.0, 0.0, 0
    parts = []
    while len(a):
        need = np.isnan(whole)
        m = 0.5 * (a + b)
        # nodes of the whole panel (where unknown) and of both halves
        segs_a = np.concatenate([a[need], a, m])
        segs_b = np.concatenate([b[need], m, b])
        half = 0.5 * (segs_b - segs_a)
        xs = (segs_a + half)[:, None] + half[:, None] * t[None, :]
        vals = g(xs.ravel()).reshape(xs.shape) @ w * half
        k = int(need.sum())
        whole[need] = vals[:k]
        left, right = vals[k:k + len(a)], vals[k + len(a):]
        fine = left + right
        diff = np.abs(whole - fine)
        budget = spec.max_panels - n_accepted - len(a)
        split = diff > spec.tol
        if split.sum() > budget:
            order = np.argsort(-diff, kind="stable")
            allowed = np.zeros(len(a), bool)
            allowed[order[:max(budget, 0)]] = True
            split &= allowed
        acc = ~split
        parts.append(fine[acc])
        err += float(diff[acc].sum())
        n_accepted += int(acc.sum())
        a, b = np.concatenate([a[split], m[split]]), np.concatenate([m[split], b[split]])
        whole = np.concatenate([left[split], right[split]])
        # keep abscissas ordered so the reduction order is deterministic
        order = np.argsort(a, kind="stable")
        a, b, whole = a[order], b[order], whole[order]
    total = float(np.sum(np.concatenate(parts)))
    limit = spec.max_bad_fraction * g.rays
    if len(g.cap_xs) > limit:
        raise RegularityError(
            f"{len(g.cap_xs)} of {g.rays} rays exceeded the bounce cap {spec.cap}",
            xs=sorted(g.cap_xs))
    return ResistanceResult(total, err, g.rays, n_accepted, g.singular, tuple(sorted(g.cap_xs)))
