"""Simulation of x^D(t) = a(t) x(t) + b(t) x(d(t)) d^D(t), with d = delta_-(h, .)."""

from __future__ import annotations

import bisect
import io
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from tsdelay import _numerics
from tsdelay.errors import HistoryGap, NonMonotoneGrid, OutOfHistoryRegime
from tsdelay.shifts import DelayFunction
from tsdelay.timescale import GridFunction, TimeScale

Fn = Callable[[float], float]


class TableHistory:
    """A history given by ``(t, value)`` samples.

    Values at sample points are returned exactly; between samples a cubic
    spline is used.
    """

    def __init__(self, rows: Sequence[tuple[float, float]]):
        rows = sorted((float(t), float(v)) for t, v in rows)
        if not rows:
            raise HistoryGap("empty history table")
        self.t = np.array([r[0] for r in rows])
        self.v = np.array([r[1] for r in rows])
        if np.any(np.diff(self.t) <= 0):
            raise HistoryGap("history table has repeated times")
        self._spline = CubicSpline(self.t, self.v) if len(rows) >= 2 else None

    def covers(self, lo: float, hi: float, tol: float = 1e-9) -> bool:
        return self.t[0] <= lo + tol * max(1.0, abs(lo)) and self.t[-1] >= hi - tol * max(1.0, abs(hi))

    def __call__(self, t: float) -> float:
        i = int(np.searchsorted(self.t, t))
        for j in (i - 1, i):
            if 0 <= j < len(self.t) and abs(self.t[j] - t) <= 1e-9 * max(1.0, abs(t)):
                return float(self.v[j])
        if self._spline is None or t < self.t[0] or t > self.t[-1]:
            raise HistoryGap(f"history is not defined at {t!r}")
        return float(self._spline(t))


@dataclass
class DelayProblem:
    delay: DelayFunction
    a: Fn
    b: Fn
    psi: Fn
    T: float

    def __post_init__(self) -> None:
        self.T = self.scale.snap(self.T)
        if self.T < self.t0:
            raise ValueError("horizon T must not precede t0")
        if isinstance(self.psi, TableHistory) and not self.psi.covers(self.start, self.t0):
            raise HistoryGap(f"history table does not cover [{self.start!r}, {self.t0!r}]")

    @property
    def scale(self) -> TimeScale:
        return self.delay.scale

    @property
    def t0(self) -> float:
        return self.delay.t0

    @property
    def h(self) -> float:
        return self.delay.h

    @property
    def start(self) -> float:
        """First point of the history window, ``delta_-(h, t0)``."""
        return self.delay.start

    def default_step(self) -> float:
        return min((self.t0 - self.start) / 64.0, 1e-2)

    def psi_norm(self, real_step: float | None = None) -> float:
        """Sup of ``|psi|`` over the closed history window."""
        pts = self.scale.grid(self.start, self.t0, real_step or self.default_step())
        return max(abs(self.psi(t)) for t in pts)


@dataclass
class Trajectory:
    """Solution samples on ``[delta_-(h, t0), T]`` with per-node delay data."""

    problem: DelayProblem
    grid: GridFunction
    i0: int  # index of t0
    mu: np.ndarray
    delayed_t: np.ndarray  # nan before t0
    delay_deriv: np.ndarray  # nan before t0
    delayed_x: np.ndarray  # nan before t0
    real_step: float | None = None
    _aux: dict = field(default_factory=dict, repr=False)

    @property
    def t(self) -> np.ndarray:
        return self.grid.points

    @property
    def x(self) -> np.ndarray:
        return self.grid.values

    def __call__(self, t: float) -> float:
        return self.grid(t)

    def value(self, t: float) -> float:
        return self.grid(t)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,x,mu,delayed_t,delay_deriv\n")
        for k in range(len(self.t)):
            row = [self.t[k], self.x[k], self.mu[k], self.delayed_t[k], self.delay_deriv[k]]
            buf.write(",".join("" if math.isnan(v) else repr(float(v)) for v in row) + "\n")
        return buf.getvalue()


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


def _method_of_steps_grid(p: DelayProblem, real_step: float) -> tuple[list[float], list[float]]:
    """Grid of the history window and of every segment ``[b_k, b_{k+1}]``, ``b_{k+1} = delta_+(h, b_k)``.

    Every segment gets the same number of nodes, so a delay function that is
    affine on each segment maps nodes onto nodes of the previous segment.
    """
    df = p.delay
    start, t0, T = p.start, p.t0, p.T
    n = max(1, math.ceil((t0 - start) / real_step - 1e-9))
    nodes = [start + (t0 - start) * j / n for j in range(n)]
    breaks = [t0]
    b = t0
    while b < T and not p.scale.same(b, T):
        nb = df.advance(b)
        if not nb > b:
            raise NonMonotoneGrid(f"delta_+(h, {b!r}) = {nb!r} does not advance")
        seg_len = nb - b
        for j in range(n):
            tj = b + seg_len * j / n
            if tj > T and not p.scale.same(tj, T):
                break
            nodes.append(tj)
        else:
            b = nb
            breaks.append(nb)
            continue
        b = tj
        breaks.append(tj)
        break
    nodes.append(b)
    if any(y <= x for x, y in zip(nodes, nodes[1:])):
        raise NonMonotoneGrid("generated grid is not strictly increasing")
    return nodes, breaks


def build_grid(p: DelayProblem, real_step: float | None = None) -> tuple[np.ndarray, tuple[float, ...]]:
    scale = p.scale
    if scale.is_isolated_between(p.start, p.T):
        return scale.grid(p.start, p.T), ()
    step = real_step if real_step is not None else p.default_step()
    pieces = scale.pieces(p.start, p.T)
    if not all(pc.kind == "dense" for pc in pieces) or len(pieces) != 1:
        raise NonMonotoneGrid("mixed dense/scattered horizons are not supported by the solver")
    nodes, breaks = _method_of_steps_grid(p, step)
    return np.asarray(nodes), tuple(breaks)


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------


def solve(p: DelayProblem, real_step: float | None = None) -> Trajectory:
    """Solve the delay equation from the history ``psi`` up to ``T``.

    Scattered points are advanced by the exact recurrence; dense segments use
    classical RK4 with delayed values read from earlier nodes (cubic Hermite
    between nodes, the exact history before ``t0``).
    """
    scale, df = p.scale, p.delay
    pts, knots = build_grid(p, real_step)
    n = len(pts)
    t0 = p.t0
    i0 = int(np.argmin(np.abs(pts - t0)))
    if not scale.same(pts[i0], t0):
        raise NonMonotoneGrid("t0 is not a grid node")
    x = np.empty(n)
    slopes = np.full(n, np.nan)
    mu = np.array([scale.mu(t) for t in pts])
    delayed_t = np.full(n, np.nan)
    dderiv = np.full(n, np.nan)
    delayed_x = np.full(n, np.nan)
    for k in range(i0 + 1):
        x[k] = p.psi(pts[k])
    tlist = [float(v) for v in pts]

    def x_at(td: float) -> float:
        if td <= t0 or scale.same(td, t0):
            if td < p.start and not scale.same(td, p.start):
                raise HistoryGap(f"delayed time {td!r} precedes the history window")
            return p.psi(scale.snap(td) if scale.same(td, t0) else td)
        j = bisect.bisect_left(tlist, td)
        for c in (j - 1, j):
            if 0 <= c < n and scale.same(tlist[c], td):
                return float(x[c])
        i = j - 1
        ta, tb = tlist[i], tlist[i + 1]
        dt = tb - ta
        s = (td - ta) / dt
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * x[i] + h10 * dt * slopes[i] + h01 * x[i + 1] + h11 * dt * slopes[i + 1]

    a, b = p.a, p.b

    def rhs(t: float, xv: float) -> float:
        td = df(t)
        return a(t) * xv + b(t) * x_at(td) * df.derivative(t)

    for k in range(i0, n):
        t = tlist[k]
        td = df(t)
        dd = df.derivative(t)
        xd = x_at(td)
        delayed_t[k], dderiv[k], delayed_x[k] = td, dd, xd
        if k == n - 1:
            break
        if mu[k] > 0:
            x[k + 1] = x[k] + mu[k] * (a(t) * x[k] + b(t) * xd * dd)
            continue
        h = tlist[k + 1] - t
        k1 = a(t) * x[k] + b(t) * xd * dd
        slopes[k] = k1
        k2 = rhs(t + h / 2, x[k] + h / 2 * k1)
        k3 = rhs(t + h / 2, x[k] + h / 2 * k2)
        k4 = rhs(t + h, x[k] + h * k3)
        x[k + 1] = x[k] + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        # provisional slope so Hermite interpolation inside this step is usable
        slopes[k + 1] = k4
    if mu[n - 1] == 0 and n - 1 > i0:
        t = tlist[n - 1]
        slopes[n - 1] = a(t) * x[n - 1] + b(t) * delayed_x[n - 1] * dderiv[n - 1]
    grid = GridFunction(pts, x, scale, knots=knots, slopes=None if np.all(np.isnan(slopes)) else slopes)
    return Trajectory(p, grid, i0, mu, delayed_t, dderiv, delayed_x, real_step)


def residual(p: DelayProblem, tr: Trajectory) -> float:
    """Max over interior grid points of ``|x^D - a x - b x(d) d^D|`` on ``[t0, T)``."""
    xd = tr.grid.delta_derivatives()
    worst = 0.0
    for k in range(tr.i0, len(tr.t) - 1):
        t = float(tr.t[k])
        r = abs(xd[k] - (p.a(t) * tr.x[k] + p.b(t) * tr.delayed_x[k] * tr.delay_deriv[k]))
        worst = max(worst, r)
    return worst


def variation_of_parameters(p: DelayProblem, t: float, x0: float | None = None, tol: float = 1e-12) -> float:
    """Solution value at ``t`` from the variation-of-parameters formula.

    Valid while the delayed argument stays inside the history window.
    """
    scale, df = p.scale, p.delay
    t = scale.snap(t)
    t0 = p.t0
    if t < t0:
        raise OutOfHistoryRegime(f"{t!r} precedes t0")
    if df(t) > t0 and not scale.same(df(t), t0):
        raise OutOfHistoryRegime(f"delta_-(h, {t!r}) = {df(t)!r} lies past t0")
    from tsdelay.calculus import ts_exponential

    a, b = p.a, p.b
    x0 = p.psi(t0) if x0 is None else x0

    def integrand(s: float) -> float:
        mu = scale.mu(s)
        ea = ts_exponential(a, t, s, scale, tol)
        return b(s) / (1.0 + mu * a(s)) * ea * p.psi(df(s)) * df.derivative(s)

    return x0 * ts_exponential(a, t, t0, scale, tol) + scale.delta_integral(integrand, t0, t, tol)
