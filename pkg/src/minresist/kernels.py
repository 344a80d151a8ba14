"""Resistance kernels and their convexification.

A kernel ``p(u)`` is the integrand of the radial resistance functional
``int_0^1 p(f'(x)) x dx``.  The optimal profile is governed by the greatest
convex minorant ``pbar`` of ``p``, by the first contact point ``u0`` of
``pbar`` with ``p``, by ``xi0 = -1/pbar'(0)``, by the generalized inverse
``upsilon`` of ``z = -1/pbar'(u)`` and by its primitive ``Upsilon``.

Three kernels have closed-form envelopes:

* ``nonconvex``      p(u) = 1 - u/sqrt(1+u^2)  (already convex)
* ``newton``         p(u) = 2/(1+u^2)
* ``single_impact``  p(0) = P_STAR, p(u) = 2/(1+u^2) for u > 0

Custom kernels are given as a table with a power-law tail and are convexified
numerically.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from ._hull import lower_hull
from .errors import DomainError, InputError

P_STAR = 8.0 * (math.log(8.0 / 5.0) + math.atan(0.5) - math.pi / 4.0)
"""Value of the single-impact kernel at u = 0 (about 1.186)."""


class KernelKind(str, enum.Enum):
    NONCONVEX = "nonconvex"
    NEWTON = "newton"
    SINGLE_IMPACT = "single_impact"
    CUSTOM = "custom"


def _check_nonnegative(u):
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(np.isnan(u)):
        raise DomainError("kernel argument must be nonnegative")
    return u


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


@dataclass(frozen=True, eq=False)
class Kernel:
    """A positive resistance kernel on ``[0, inf)`` with a ``c*u**-alpha`` tail.

    Use the constructors :meth:`nonconvex`, :meth:`newton`,
    :meth:`single_impact` and :meth:`custom` rather than calling the class.
    """

    kind: KernelKind
    tail_c: float
    tail_alpha: float
    table_u: np.ndarray | None = None
    table_p: np.ndarray | None = None
    _interp: PchipInterpolator | None = field(default=None, repr=False)

    @classmethod
    def nonconvex(cls):
        return cls(KernelKind.NONCONVEX, 0.5, 2.0)

    @classmethod
    def newton(cls):
        return cls(KernelKind.NEWTON, 2.0, 2.0)

    @classmethod
    def single_impact(cls):
        return cls(KernelKind.SINGLE_IMPACT, 2.0, 2.0)

    @classmethod
    def custom(cls, u, p, tail_c, tail_alpha):
        """Tabulated kernel, monotone (PCHIP) between samples, power tail beyond.

        The grid must start at ``u = 0`` and be strictly increasing; all values
        must be positive and the table must decay (last value below the first).
        """
        u = np.asarray(u, dtype=float)
        p = np.asarray(p, dtype=float)
        if u.ndim != 1 or u.shape != p.shape or len(u) < 2:
            raise InputError("kernel table needs at least two (u, p) samples")
        if u[0] != 0.0:
            raise InputError("kernel table must start at u = 0")
        if np.any(np.diff(u) <= 0):
            raise InputError("kernel table abscissas must be strictly increasing")
        if np.any(p <= 0) or not np.all(np.isfinite(p)):
            raise InputError("kernel values must be positive and finite")
        if not p[-1] < p[0]:
            raise InputError("kernel table does not decay; p(u) must tend to 0")
        if not (tail_c > 0 and tail_alpha > 0):
            raise InputError("tail parameters c and alpha must be positive")
        u.setflags(write=False)
        p.setflags(write=False)
        return cls(KernelKind.CUSTOM, float(tail_c), float(tail_alpha), u, p,
                   PchipInterpolator(u, p, extrapolate=False))

    @classmethod
    def from_json(cls, source):
        """Load a custom kernel from a JSON document, file path or dict.

        Schema: ``{"samples": [[u, p], ...], "tail_c": c, "tail_alpha": a}``.
        """
        if isinstance(source, dict):
            doc = source
        else:
            try:
                text = Path(source).read_text()
                doc = json.loads(text)
            except (OSError, json.JSONDecodeError) as exc:
                raise InputError(f"cannot read kernel file {source}: {exc}") from exc
        try:
            samples = np.asarray(doc["samples"], dtype=float)
            c, alpha = float(doc["tail_c"]), float(doc["tail_alpha"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed kernel document: {exc}") from exc
        if samples.ndim != 2 or samples.shape[1] != 2:
            raise InputError("kernel samples must be a list of [u, p] pairs")
        return cls.custom(samples[:, 0], samples[:, 1], c, alpha)

    @classmethod
    def by_name(cls, name):
        key = name.replace("-", "_").lower()
        try:
            return {"nonconvex": cls.nonconvex, "newton": cls.newton,
                    "single_impact": cls.single_impact}[key]()
        except KeyError:
            raise InputError(f"unknown kernel {name!r}") from None

    @property
    def name(self):
        return self.kind.value

    @property
    def p0(self):
        return float(self(0.0))

    def to_json(self):
        if self.kind is not KernelKind.CUSTOM:
            return {"kind": self.name}
        return {"samples": np.column_stack([self.table_u, self.table_p]).tolist(),
                "tail_c": self.tail_c, "tail_alpha": self.tail_alpha}

    def __call__(self, u):
        u_arr = _check_nonnegative(u)
        if self.kind is KernelKind.NONCONVEX:
            # 1 - u/sqrt(1+u^2), written without cancellation for large u
            r = np.sqrt(1.0 + u_arr * u_arr)
            out = 1.0 / (r * (r + u_arr))
        elif self.kind is KernelKind.NEWTON:
            out = 2.0 / (1.0 + u_arr * u_arr)
        elif self.kind is KernelKind.SINGLE_IMPACT:
            out = np.where(u_arr == 0.0, P_STAR, 2.0 / (1.0 + u_arr * u_arr))
        else:
            out = np.empty_like(u_arr)
            inside = u_arr <= self.table_u[-1]
            out[inside] = self._interp(u_arr[inside])
            tail = u_arr[~inside]
            out[~inside] = self.tail_c * tail ** (-self.tail_alpha)
        return _scalar_or_array(out, u)


def eval_kernel(kernel, u):
    """Evaluate ``p(u)``; raises :class:`DomainError` for negative ``u``."""
    return kernel(u)


class ConvexEnvelope:
    """Convexification data of a kernel.

    Subclasses provide ``value``, ``slope`` (one-sided derivatives),
    ``upsilon`` and ``upsilon_primitive``.  All methods accept scalars or
    arrays.
    """

    kernel: Kernel
    u0: float
    xi0: float

    @property
    def p0(self):
        return self.kernel.p0

    @property
    def tail_c(self):
        return self.kernel.tail_c

    @property
    def tail_alpha(self):
        return self.kernel.tail_alpha

    def _check_z(self, z):
        z_arr = np.asarray(z, dtype=float)
        if np.any(z_arr < self.xi0) or np.any(np.isnan(z_arr)):
            raise DomainError(f"z must be >= xi0 = {self.xi0!r}")
        return z_arr

    def value(self, u):
        raise NotImplementedError

    def slope(self, u, side="right"):
        raise NotImplementedError

    def upsilon(self, z):
        raise NotImplementedError

    def upsilon_primitive(self, z):
        raise NotImplementedError

    def __repr__(self):
        return (f"{type(self).__name__}(kernel={self.kernel.name}, "
                f"u0={self.u0:.12g}, xi0={self.xi0:.12g})")


# -- nonconvex kernel --------------------------------------------------------

# binom(1/2, k) / (2k + 3), times 3: series of 3*int_0^u s^2 sqrt(1+s^2) ds
_NC_SERIES = [3.0 * c / (2 * k + 3) for k, c in
              enumerate([1.0, 0.5, -0.125, 0.0625, -0.0390625, 0.02734375])]


def _nc_primitive_of_u(u):
    u = np.asarray(u, dtype=float)
    small = u < 0.05
    out = np.empty_like(u)
    us = u[small]
    acc = np.zeros_like(us)
    for k, c in reversed(list(enumerate(_NC_SERIES))):
        acc = acc * us * us + c
    out[small] = acc * us ** 3
    ub = u[~small]
    out[~small] = 0.375 * (ub * (2 * ub * ub + 1) * np.sqrt(1 + ub * ub) - np.arcsinh(ub))
    return out


class NonconvexEnvelope(ConvexEnvelope):
    """``p_nc`` is convex, so the envelope is the kernel itself (u0 = 0, xi0 = 1)."""

    def __init__(self):
        self.kernel = Kernel.nonconvex()
        self.u0 = 0.0
        self.xi0 = 1.0

    def value(self, u):
        return self.kernel(u)

    def slope(self, u, side="right"):
        u_arr = _check_nonnegative(u)
        return _scalar_or_array(-(1.0 + u_arr * u_arr) ** -1.5, u)

    def upsilon(self, z):
        z_arr = self._check_z(z)
        out = np.sqrt(np.expm1(np.log(z_arr) * (2.0 / 3.0)))
        return _scalar_or_array(out, z)

    def upsilon_primitive(self, z):
        z_arr = self._check_z(z)
        u = np.sqrt(np.expm1(np.log(z_arr) * (2.0 / 3.0)))
        return _scalar_or_array(_nc_primitive_of_u(u), z)


# -- kernels with the Newton tail 2/(1+u^2) ----------------------------------

def _newton_z_of_u(u):
    # -1/p'(u) for p = 2/(1+u^2)
    return (1.0 + u * u) ** 2 / (4.0 * u)


def _newton_primitive_of_u(u):
    return 0.25 * (0.75 * u ** 4 + u * u - np.log(u))


class NewtonTailEnvelope(ConvexEnvelope):
    """Envelope of a kernel equal to ``2/(1+u^2)`` for ``u > 0``.

    Left of the tangency point ``u0`` the envelope is the affine function
    ``p(0) - u/xi0``; right of it the envelope coincides with the kernel.
    """

    def __init__(self, kernel):
        if kernel.kind is KernelKind.NEWTON:
            u0 = 1.0
        elif kernel.kind is KernelKind.SINGLE_IMPACT:
            # tangent from (0, P_STAR): 4w^2 - 6w + P_STAR = 0 with w = 1/(1+u^2)
            w = (6.0 - math.sqrt(36.0 - 16.0 * P_STAR)) / 8.0
            u0 = math.sqrt(1.0 / w - 1.0)
        else:
            raise DomainError(f"no closed-form envelope for kernel {kernel.name}")
        self.kernel = kernel
        self.u0 = u0
        self.xi0 = float(_newton_z_of_u(u0))
        self._p0 = kernel.p0
        self._F0 = float(_newton_primitive_of_u(u0))

    def value(self, u):
        u_arr = _check_nonnegative(u)
        out = np.where(u_arr < self.u0, self._p0 - u_arr / self.xi0,
                       2.0 / (1.0 + u_arr * u_arr))
        return _scalar_or_array(out, u)

    def slope(self, u, side="right"):
        u_arr = _check_nonnegative(u)
        # the envelope is C^1 at u0, so both sides agree everywhere
        out = np.where(u_arr < self.u0, -1.0 / self.xi0,
                       -4.0 * u_arr / (1.0 + u_arr * u_arr) ** 2)
        return _scalar_or_array(out, u)

    def upsilon(self, z):
        z_arr = self._check_z(z)
        return _scalar_or_array(self._invert(z_arr), z)

    def _invert(self, z):
        # z = u^3/4 + u/2 + 1/(4u) is convex increasing on [u0, inf); Newton's
        # method started right of the root decreases monotonically onto it.
        u = np.maximum(np.cbrt(4.0 * z), self.u0)
        for _ in range(200):
            g = _newton_z_of_u(u) - z
            dg = 0.75 * u * u + 0.5 - 0.25 / (u * u)
            step = g / dg
            u_new = np.maximum(u - step, self.u0)
            if np.all(u_new >= u):
                break
            u = np.minimum(u, u_new)
        return np.where(z == self.xi0, self.u0, u)

    def upsilon_primitive(self, z):
        z_arr = self._check_z(z)
        u = self._invert(z_arr)
        out = np.maximum(_newton_primitive_of_u(u) - self._F0, 0.0)
        return _scalar_or_array(out, z)


# -- numeric convexification -------------------------------------------------

class SampledEnvelope(ConvexEnvelope):
    """Piecewise-affine lower hull of kernel samples plus the analytic tail.

    ``upsilon`` is the exact generalized inverse of this piecewise-affine
    function (a step function) and ``upsilon_primitive`` its exact integral;
    beyond the last hull vertex the tail ``c*u**-alpha`` is used.
    """

    def __init__(self, kernel, u_max=64.0, n=2 ** 16, contact_tol=1e-9):
        if u_max <= 0 or n < 3:
            raise DomainError("u_max must be positive and n >= 3")
        self.kernel = kernel
        grid = np.linspace(0.0, u_max, int(n))
        tail = u_max * 2.0 ** (np.arange(1, 321) / 16.0)
        u = np.concatenate([grid, tail])
        p = np.asarray(kernel(u), dtype=float)
        idx = lower_hull(u, p)
        self.vertices_u = u[idx]
        self.vertices_p = p[idx]
        self.slopes = np.diff(self.vertices_p) / np.diff(self.vertices_u)
        if not np.all(self.slopes < 0):
            raise InputError("kernel envelope is not decreasing; kernel must decay to 0")
        # first grid point (u > 0) where the envelope touches the kernel;
        # touching already at the first step means no detectable gap at 0
        gap = p[: len(grid)] - np.interp(grid, self.vertices_u, self.vertices_p)
        touch = np.flatnonzero(gap[1:] < contact_tol * p[0]) + 1
        k = int(touch[0]) if len(touch) else len(grid) - 1
        self.u0 = 0.0 if k == 1 else float(grid[k])
        self.xi0 = float(-1.0 / self.slopes[0])
        # breakpoints of upsilon: zeta_k = -1/slope_k, nondecreasing
        self._zeta = -1.0 / self.slopes
        cum = np.concatenate([[0.0], np.cumsum(self.vertices_u[1:-1] * np.diff(self._zeta))])
        self._cum = cum
        self._u_last = float(self.vertices_u[-1])
        c, a = kernel.tail_c, kernel.tail_alpha
        self._z_tail = self._u_last ** (a + 1.0) / (c * a)

    def value(self, u):
        u_arr = _check_nonnegative(u)
        # chords over contact stretches lie above a convex kernel; clamp to p
        inner = np.minimum(np.interp(u_arr, self.vertices_u, self.vertices_p),
                           self.kernel(u_arr))
        out = np.where(u_arr <= self._u_last, inner,
                       self.kernel(np.maximum(u_arr, self._u_last)))
        return _scalar_or_array(out, u)

    def slope(self, u, side="right"):
        u_arr = _check_nonnegative(u)
        s = self.slopes
        if side == "right":
            k = np.searchsorted(self.vertices_u, u_arr, side="right") - 1
        else:
            k = np.searchsorted(self.vertices_u, u_arr, side="left") - 1
            k = np.maximum(k, 0)
        c, a = self.tail_c, self.tail_alpha
        tail = -c * a * np.maximum(u_arr, self._u_last) ** (-a - 1.0)
        out = np.where(k >= len(s), tail, s[np.clip(k, 0, len(s) - 1)])
        return _scalar_or_array(out, u)

    def upsilon(self, z):
        z_arr = self._check_z(z)
        k = np.searchsorted(self._zeta, z_arr, side="right") - 1
        inner = self.vertices_u[np.clip(k + 1, 0, len(self.vertices_u) - 1)]
        c, a = self.tail_c, self.tail_alpha
        tail = np.maximum(self._u_last, (c * a * z_arr) ** (1.0 / (a + 1.0)))
        out = np.where(k >= len(self._zeta) - 1, tail, inner)
        return _scalar_or_array(out, z)

    def upsilon_primitive(self, z):
        z_arr = self._check_z(z)
        zeta = self._zeta
        k = np.clip(np.searchsorted(zeta, z_arr, side="right") - 1, 0, len(zeta) - 1)
        inner_k = np.minimum(k, len(zeta) - 2)
        inner = self._cum[inner_k] + self.vertices_u[inner_k + 1] * (z_arr - zeta[inner_k])
        # past the last breakpoint: upsilon = u_last until the tail takes over
        z_last = zeta[-1]
        base = self._cum[-1]
        c, a = self.tail_c, self.tail_alpha
        zt = max(self._z_tail, z_last)
        flat = base + self._u_last * (np.minimum(z_arr, zt) - z_last)
        e = (a + 2.0) / (a + 1.0)
        coef = (c * a) ** (1.0 / (a + 1.0)) / e
        powr = coef * (np.maximum(z_arr, zt) ** e - zt ** e)
        out = np.where(k >= len(zeta) - 1, flat + powr, inner)
        return _scalar_or_array(out, z)


def convexify(kernel, u_max=64.0, n=2 ** 16, numeric=None):
    """Greatest convex minorant of ``kernel``.

    Built-in kernels use their closed-form envelopes unless ``numeric=True``;
    custom kernels are always convexified numerically on ``n`` samples of
    ``[0, u_max]`` plus a geometric tail.
    """
    if numeric is None:
        numeric = kernel.kind is KernelKind.CUSTOM
    if not numeric:
        if kernel.kind is KernelKind.NONCONVEX:
            return NonconvexEnvelope()
        if kernel.kind in (KernelKind.NEWTON, KernelKind.SINGLE_IMPACT):
            return NewtonTailEnvelope(kernel)
        raise DomainError("custom kernels have no closed-form envelope")
    return SampledEnvelope(kernel, u_max=u_max, n=n)


def upsilon(envelope, z):
    """Generalized inverse ``sup{u : -1/pbar'(u) <= z}`` for ``z >= xi0``."""
    return envelope.upsilon(z)


def upsilon_primitive(envelope, z):
    """``Upsilon(z) = int_{xi0}^z upsilon``; zero at ``xi0``."""
    return envelope.upsilon_primitive(z)
