"""Regressivity, the time-scale exponential, and the delay-integral identities."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from tsdelay import _numerics
from tsdelay.errors import DenseSignChange, NotRegressive, PointNotInScale, ZeroValueAt
from tsdelay.shifts import DelayFunction
from tsdelay.timescale import GridFunction, TimeScale

Fn = Callable[[float], float]


@dataclass(frozen=True)
class RegressiveFunction:
    """A coefficient ``p`` on a scale with its regressivity class on a horizon.

    ``klass`` is ``"R+"`` when ``1 + mu p > 0`` at every sampled point,
    ``"R"`` when it is merely nonzero, and ``None`` otherwise.
    """

    f: Fn
    scale: TimeScale
    horizon: tuple[float, float] | None = None
    real_step: float | None = None

    def __call__(self, t: float) -> float:
        return self.f(t)

    @property
    def klass(self) -> str | None:
        if self.horizon is None:
            return None
        pts = self.scale.grid(*self.horizon, self.real_step)
        vals = [1.0 + self.scale.mu(t) * self.f(t) for t in pts[:-1]]
        if all(v > 0 for v in vals):
            return "R+"
        if all(v != 0 for v in vals):
            return "R"
        return None


def _unwrap(p, scale: TimeScale | None) -> tuple[Fn, TimeScale]:
    if isinstance(p, RegressiveFunction):
        return p.f, p.scale
    if scale is None:
        raise TypeError("a scale is required for a bare callable")
    return p, scale


def circle_minus(p, t: float, scale: TimeScale | None = None) -> float:
    """``-p(t) / (1 + mu(t) p(t))``."""
    f, scale = _unwrap(p, scale)
    mu = scale.mu(t)
    val = f(t)
    d = 1.0 + mu * val
    if d == 0.0:
        raise NotRegressive(t, d)
    return -val / d


def cylinder(z: float, mu: float) -> float:
    """Real cylinder transform; defined only where ``1 + mu z > 0``."""
    if mu == 0.0:
        return z
    w = 1.0 + mu * z
    if w <= 0:
        raise NotRegressive(None, w)
    return math.log(w) / mu


def ts_exponential(p, t: float, s: float, scale: TimeScale | None = None, tol: float | None = None) -> float:
    """The exponential ``e_p(t, s)``.

    Scattered points contribute the exact factor ``1 + mu p`` (its sign is
    carried, so negative factors are allowed); dense pieces contribute
    ``exp`` of the integral of ``p``.
    """
    f, scale = _unwrap(p, scale)
    t, s = scale.snap(t), scale.snap(s)
    if t < s:
        return 1.0 / ts_exponential(f, s, t, scale, tol)
    prod = 1.0
    dense = 0.0
    for piece in scale.pieces(s, t):
        if piece.kind == "point":
            factor = 1.0 + piece.mu * f(piece.lo)
            if factor == 0.0:
                raise NotRegressive(piece.lo, factor)
            prod *= factor
        else:
            dense += _numerics.adaptive_simpson(f, piece.lo, piece.hi, scale.quad_tol if tol is None else tol)
    return prod * math.exp(dense) if dense else prod


def grid_exponential(gf: GridFunction, pvals: np.ndarray) -> np.ndarray:
    """``e_p(points[k], points[0])`` for samples of ``p`` on the nodes of ``gf``."""
    pts = gf.points
    p = np.asarray(pvals, dtype=float)
    idx = np.flatnonzero(gf.scattered)
    jumps = np.zeros(len(pts))
    jumps[idx + 1] = (pts[idx + 1] - pts[idx]) * p[idx]
    # the dense part of the integral of p, without the mu*p terms of scattered nodes
    log_dense = gf.cumulative_integral(p) - np.cumsum(jumps)
    factors = 1.0 + jumps
    if np.any(factors == 0.0):
        k = int(np.flatnonzero(factors == 0.0)[0]) - 1
        raise NotRegressive(float(pts[k]), 0.0)
    return np.cumprod(factors) * np.exp(log_dense)


# ---------------------------------------------------------------------------
# Identities for integrals over the delay window
# ---------------------------------------------------------------------------


def delayed_integral_direct(df: DelayFunction, f: Fn, t: float) -> float:
    """``int_{delta_-(h,t)}^t f`` evaluated directly."""
    return df.scale.delta_integral(f, df(t), t)


def delayed_integral_split(df: DelayFunction, f: Fn, t: float) -> float:
    """The same integral through the substitution ``s -> delta_-(h, s)``:
    ``int_t^{t0} f(delta_-(h,s)) delta_-^D(h,s) ds + int_{delta_-(h,t0)}^t f``."""
    scale = df.scale
    sub = scale.delta_integral(lambda s: f(df(s)) * df.derivative(s), t, df.t0)
    return sub + scale.delta_integral(f, df.start, t)


def leibniz_delay_derivative(
    df: DelayFunction, f: Callable[[float, float], float], f_delta_t: Callable[[float, float], float], t: float
) -> float:
    """Delta derivative of ``g(t) = int_{delta_-(h,t)}^t f(t, s) ds`` by the Leibniz rule."""
    scale = df.scale
    sig = scale.sigma(t)
    d = df(t)
    return f(sig, t) - f(sig, d) * df.derivative(t) + scale.delta_integral(lambda s: f_delta_t(t, s), d, t)


def leibniz_direct(df: DelayFunction, f: Callable[[float, float], float], t: float) -> float:
    """Delta derivative of ``g`` computed from ``g`` itself (oracle for the Leibniz rule)."""
    scale = df.scale

    def g(r: float) -> float:
        return scale.delta_integral(lambda s: f(r, s), df(r), r)

    return scale.delta_derivative(g, t)


def interchange_double(df: DelayFunction, k: Fn, t: float) -> tuple[float, float]:
    """Both sides of the order-of-integration identity over the delay window.

    ``lhs = int_{delta_-(h,t)}^t ds int_s^t k(u) du`` (nested) and
    ``rhs = int_{delta_-(h,t)}^t (sigma(u) - delta_-(h,t)) k(u) du``.
    """
    scale = df.scale
    d = df(t)
    lhs = scale.delta_integral(lambda s: scale.delta_integral(k, s, t), d, t)
    rhs = scale.delta_integral(lambda u: (scale.sigma(u) - d) * k(u), d, t)
    return lhs, rhs


def abs_delta_derivative(x: GridFunction, t: float) -> float:
    """Delta derivative of ``|x|`` at a grid node ``t`` with ``x(t) != 0``."""
    i = x.node(t)
    if i is None:
        raise PointNotInScale(t, x.scale)
    if i >= len(x) - 1:
        raise ValueError(f"{t!r} is the last grid node")
    xi, xs = x.values[i], x.values[i + 1]
    if xi == 0.0:
        raise ZeroValueAt(float(x.points[i]))
    sign = 1.0 if xi > 0 else -1.0
    if x.scattered[i]:
        mu = x.points[i + 1] - x.points[i]
        xd = (xs - xi) / mu
        if xi * xs >= 0:
            return sign * xd
        return -(2.0 / mu) * abs(xi) - sign * xd
    lo, hi = max(i - 1, 0), i + 1
    if np.any(x.values[lo : hi + 1] * xi <= 0):
        raise DenseSignChange(f"x changes sign next to the right-dense point {float(x.points[i])!r}")
    return sign * float(x.delta_derivatives()[i])
