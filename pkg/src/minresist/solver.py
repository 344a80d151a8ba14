"""Optimal convex-hull profiles for a convexified kernel.

For height ``h`` the multiplier ``z`` solves ``Upsilon(z) = z*h``; the profile
is flat on ``[0, x0]`` with ``x0 = xi0/z`` and equals ``Upsilon(z*x)/z``
beyond, and the minimal resistance is
``R(h) = (pbar(upsilon(z)) + (upsilon(z) - h)/z) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NumericError, RegimeError
from .kernels import ConvexEnvelope, Kernel, KernelKind, convexify

M_STAR = 0.54
"""Height below which the single-impact kernel reduction is not valid (approximate)."""


def _as_envelope(obj):
    if isinstance(obj, ConvexEnvelope):
        return obj
    if isinstance(obj, str):
        obj = Kernel.by_name(obj)
    if isinstance(obj, Kernel):
        return convexify(obj)
    raise TypeError(f"expected a kernel, kernel name or envelope, got {type(obj).__name__}")


def solve_multiplier(envelope: ConvexEnvelope, h: float) -> float:
    """Unique ``z >= xi0`` with ``Upsilon(z) = z*h``.

    ``Upsilon(z)/z`` is continuous and increasing, so a doubling bracket
    followed by bisection always converges.
    """
    h = float(h)
    if not h >= 0.0:
        raise DomainError("height must be nonnegative")
    xi0 = envelope.xi0
    if h == 0.0:
        return xi0

    def g(z):
        return float(envelope.upsilon_primitive(z)) / z - h

    lo, hi = xi0, 2.0 * xi0
    while g(hi) < 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e18 * xi0:
            raise NumericError(f"could not bracket the multiplier for h = {h!r}")
    while hi - lo > 1e-15 * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return lo if abs(g(lo)) <= abs(g(hi)) else hi


@dataclass(frozen=True)
class ProfileSolution:
    """Solution of the height-``h`` problem: ``f_h``, its multiplier and resistance."""

    h: float
    z: float
    x0: float
    resistance: float
    envelope: ConvexEnvelope

    @property
    def lam(self) -> float:
        """Pontryagin multiplier ``lambda = 1/z``."""
        return 1.0 / self.z

    @property
    def kernel(self) -> Kernel:
        return self.envelope.kernel

    def _check_x(self, x):
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < 0.0) or np.any(x_arr > 1.0) or np.any(np.isnan(x_arr)):
            raise DomainError("profile abscissa must lie in [0, 1]")
        return x_arr

    def profile(self, x):
        """``f_h(x)``; zero on the flat disk ``[0, x0]``."""
        x_arr = self._check_x(x)
        if self.h == 0.0:
            out = np.zeros_like(x_arr)
        else:
            zx = np.maximum(self.z * x_arr, self.envelope.xi0)
            out = np.where(x_arr <= self.x0, 0.0,
                           self.envelope.upsilon_primitive(zx) / self.z)
        return float(out) if np.ndim(x) == 0 else out

    def slope(self, x, side="right"):
        """One-sided derivative of ``f_h``; jumps from 0 to ``u0`` at ``x0``."""
        x_arr = self._check_x(x)
        if self.h == 0.0:
            out = np.zeros_like(x_arr)
        else:
            zx = np.maximum(self.z * x_arr, self.envelope.xi0)
            inside = x_arr > self.x0 if side == "left" else x_arr >= self.x0
            out = np.where(inside, self.envelope.upsilon(zx), 0.0)
        return float(out) if np.ndim(x) == 0 else out

    def sample(self, n=201):
        """``(x, f, slope)`` on ``n`` uniform abscissas of ``[0, 1]``."""
        x = np.linspace(0.0, 1.0, int(n))
        return x, self.profile(x), self.slope(x)

    def summary(self) -> dict:
        e = self.envelope
        return {"h": self.h, "z": self.z, "lambda": self.lam, "x0": self.x0,
                "resistance": self.resistance, "kernel": e.kernel.name,
                "u0": e.u0, "xi0": e.xi0}


def solve(kernel, h: float) -> ProfileSolution:
    """Solve for the optimal profile of height ``h``.

    ``kernel`` may be a :class:`Kernel`, a built-in kernel name or an already
    convexified envelope.  The single-impact kernel is only meaningful for
    ``h > M_STAR``; smaller heights raise :class:`RegimeError` (see
    :func:`minresist.zigzag.chain_body`).
    """
    env = _as_envelope(kernel)
    h = float(h)
    if not h >= 0.0 or not math.isfinite(h):
        raise DomainError("height must be a finite nonnegative number")
    if env.kernel.kind is KernelKind.SINGLE_IMPACT and h <= M_STAR:
        raise RegimeError(
            f"single-impact height {h} <= M* = {M_STAR}: chain regime, "
            "build the body with zigzag.chain_body instead")
    if h == 0.0:
        return ProfileSolution(0.0, env.xi0, 1.0, 0.5 * env.p0, env)
    z = solve_multiplier(env, h)
    x0 = min(env.xi0 / z, 1.0)
    return ProfileSolution(h, z, x0, _resistance(env, z, h), env)


def _resistance(env, z, h):
    u = float(env.upsilon(z))
    return 0.5 * (float(env.value(u)) + (u - h) / z)


def profile(s: ProfileSolution, x):
    return s.profile(x)


def minimal_resistance(s: ProfileSolution) -> float:
    """``R(h)``; equals ``p(0)/2`` at ``h = 0``."""
    return s.resistance


def asymptotic_x0(c, alpha, xi0, h):
    """Large-``h`` flat-disk radius ``c*alpha*((alpha+1)/(alpha+2))**(alpha+1)*xi0*h**(-alpha-1)``."""
    if not h > 0 or not c > 0 or not alpha > 0:
        raise DomainError("asymptotic_x0 needs positive h, c and alpha")
    return c * alpha * ((alpha + 1.0) / (alpha + 2.0)) ** (alpha + 1.0) * xi0 * h ** (-alpha - 1.0)


def asymptotic_R(c, alpha, h):
    """Large-``h`` resistance ``c*((alpha+1)/(alpha+2))**(alpha+1)*h**(-alpha)``."""
    if not h > 0 or not c > 0 or not alpha > 0:
        raise DomainError("asymptotic_R needs positive h, c and alpha")
    return c * ((alpha + 1.0) / (alpha + 2.0)) ** (alpha + 1.0) * h ** (-alpha)


def single_impact_R0() -> float:
    return math.pi / 2.0 - 2.0 * math.atan(0.5)


# -- Newton's classical solution in parametric form --------------------------

def _newton_F(u):
    return 0.75 * u ** 4 + u * u - np.log(u) - 1.75


@dataclass(frozen=True)
class NewtonParametric:
    """Newton's profile as ``u -> (x(u), f(u))`` for ``u`` in ``[1, u_star]``."""

    h: float
    u_star: float
    x0: float

    def x(self, u):
        u = np.asarray(u, dtype=float)
        return self.x0 / 4.0 * (1.0 + u * u) ** 2 / u

    def f(self, u):
        return self.x0 / 4.0 * _newton_F(np.asarray(u, dtype=float))

    def sample(self, n=201):
        u = np.linspace(1.0, self.u_star, int(n))
        return u, self.x(u), self.f(u)


def newton_parametric(h: float) -> NewtonParametric:
    h = float(h)
    if not h > 0.0:
        raise DomainError("newton_parametric needs h > 0")

    def height(u):
        return _newton_F(u) * u / (1.0 + u * u) ** 2 - h

    hi = 2.0
    while height(hi) < 0.0:
        hi *= 2.0
    u_star = brentq(height, 1.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return NewtonParametric(h, u_star, 4.0 * u_star / (1.0 + u_star * u_star) ** 2)


# -- verification against the pointwise minimum condition --------------------

@dataclass(frozen=True)
class PontryaginReport:
    max_violation: float
    worst_x: float
    flat_ok: bool
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_violation < self.tol and self.flat_ok


def pontryagin_check(s: ProfileSolution, x_grid=None, u_grid=None, tol=1e-8):
    """Check that ``u = f_h'(x)`` minimizes ``x*p(u) + lambda*u`` over ``u >= 0``.

    The minimum is taken over ``u_grid`` (default: 10**4 points on
    ``[0, 4*upsilon(z)]``) at every ``x`` of ``x_grid`` (default: 200 points in
    ``(x0, 1]`` plus 20 on the flat disk).  Violations are reported, not raised.
    """
    env = s.envelope
    lam = s.lam
    if x_grid is None:
        outer = np.linspace(s.x0, 1.0, 201)[1:]
        flat = np.linspace(0.0, s.x0, 21)[:-1]
        x_grid = np.concatenate([flat, outer])
    x_grid = np.asarray(x_grid, dtype=float)
    if u_grid is None:
        top = 4.0 * float(env.upsilon(s.z))
        u_grid = np.linspace(0.0, max(top, 4.0 * max(env.u0, 1.0)), 10_000)
    u_grid = np.asarray(u_grid, dtype=float)
    p_grid = np.asarray(env.kernel(u_grid))
    slopes = np.asarray(s.slope(x_grid))
    lhs = x_grid * np.asarray(env.kernel(slopes)) + lam * slopes
    rhs = (x_grid[:, None] * p_grid[None, :] + lam * u_grid[None, :]).min(axis=1)
    viol = lhs - rhs
    k = int(np.argmax(viol))
    flat_x = x_grid[x_grid <= s.x0]
    flat_ok = bool(np.all(flat_x / lam <= env.xi0 * (1 + 1e-12)))
    return PontryaginReport(float(max(viol[k], 0.0)), float(x_grid[k]), flat_ok, tol)
