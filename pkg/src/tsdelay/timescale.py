"""Computable time scales: membership, forward jump, graininess, grids,
delta integrals and delta derivatives.

Two families are provided. Interval unions (``RealInterval``,
``UnionOfIntervals``, ``FiniteGrid``) are stored as sorted closed intervals,
degenerate intervals being isolated points. Lattices (``StepLattice``,
``UnitLattice``, ``QLattice``, ``SqrtNaturals``) store points by an integer
index so that jumps and grids are exact.
"""

from __future__ import annotations

import bisect
import math
from abc import ABC, abstractmethod
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from tsdelay import _numerics
from tsdelay.errors import AtSupremum, EmptyInterval, PointNotInScale, UnboundedGrid

SNAP_TOL = 1e-9
INF = math.inf


class Piece(NamedTuple):
    """One piece of ``[a, b)``: a dense interval or a right-scattered point."""

    kind: str  # "dense" | "point"
    lo: float
    hi: float  # for points: sigma(lo)

    @property
    def mu(self) -> float:
        return self.hi - self.lo if self.kind == "point" else 0.0


class TimeScale(ABC):
    """A nonempty closed subset of the reals that can be computed with."""

    snap_tol: float = SNAP_TOL
    quad_tol: float = _numerics.DEFAULT_QUAD_TOL
    fd_step: float = 1e-3

    # -- membership ---------------------------------------------------------

    @abstractmethod
    def snap(self, t: float) -> float:
        """Return the exact scale point equal to ``t`` up to the snap tolerance."""

    def contains(self, t: float) -> bool:
        try:
            self.snap(t)
        except PointNotInScale:
            return False
        return True

    def __contains__(self, t: float) -> bool:
        return self.contains(t)

    def same(self, s: float, t: float) -> bool:
        return abs(s - t) <= self.snap_tol * max(1.0, abs(s), abs(t))

    @property
    @abstractmethod
    def inf(self) -> float: ...

    @property
    @abstractmethod
    def sup(self) -> float: ...

    # -- jumps --------------------------------------------------------------

    @abstractmethod
    def _sigma(self, t: float) -> float:
        """Forward jump of an already snapped point below the supremum."""

    def jump(self, t: float) -> tuple[float, float]:
        """Return ``(sigma(t), mu(t))``."""
        t = self.snap(t)
        if t >= self.sup:
            raise AtSupremum(t)
        s = self._sigma(t)
        return s, s - t

    def sigma(self, t: float) -> float:
        t = self.snap(t)
        if t >= self.sup:
            return t
        return self._sigma(t)

    def mu(self, t: float) -> float:
        t = self.snap(t)
        if t >= self.sup:
            return 0.0
        return self._sigma(t) - t

    def is_right_scattered(self, t: float) -> bool:
        return self.mu(t) > 0.0

    @abstractmethod
    def pieces(self, a: float, b: float) -> list[Piece]:
        """Decompose ``[a, b)`` (``a <= b``, both snapped) into pieces, left to right."""

    @abstractmethod
    def _grid(self, a: float, b: float, real_step: float) -> list[float]: ...

    def grid(self, a: float, b: float, real_step: float | None = None) -> np.ndarray:
        """Points of ``[a, b]`` on the scale; dense parts sampled with spacing ``<= real_step``."""
        a, b = self.snap(a), self.snap(b)
        if a > b:
            raise EmptyInterval(f"empty interval [{a!r}, {b!r}]")
        step = real_step if real_step is not None else 1e-2
        if step <= 0:
            raise ValueError("real_step must be positive")
        return np.asarray(self._grid(a, b, step), dtype=float)

    def is_isolated_between(self, a: float, b: float) -> bool:
        return all(p.kind == "point" for p in self.pieces(self.snap(a), self.snap(b)))

    # -- calculus -----------------------------------------------------------

    def delta_integral(
        self, f: Callable[[float], float], a: float, b: float, tol: float | None = None
    ) -> float:
        """Delta integral of ``f`` from ``a`` to ``b``.

        Scattered points contribute ``mu(t) f(t)`` exactly; dense pieces use
        adaptive Simpson at ``tol``. Reversed limits flip the sign.
        """
        a, b = self.snap(a), self.snap(b)
        if a > b:
            return -self.delta_integral(f, b, a, tol)
        tol = self.quad_tol if tol is None else tol
        total = 0.0
        for piece in self.pieces(a, b):
            if piece.kind == "point":
                total += piece.mu * f(piece.lo)
            else:
                total += _numerics.adaptive_simpson(f, piece.lo, piece.hi, tol)
        return total

    def _dense_room(self, t: float) -> tuple[float, float]:
        """Length of scale interval available left/right of a dense point."""
        return (0.0, INF)

    def delta_derivative(self, f: Callable[[float], float], t: float, step: float | None = None) -> float:
        """Hilger derivative: forward quotient if scattered, 4th-order difference if dense."""
        sig, mu = self.jump(t)
        t = self.snap(t)
        if mu > 0:
            return (f(sig) - f(t)) / mu
        h = self.fd_step if step is None else step
        left, right = self._dense_room(t)
        if left >= 2 * h and right >= 2 * h:
            return _numerics.central_derivative(f, t, h, one_sided=False)
        if right >= 4 * h:
            return _numerics.central_derivative(f, t, h, one_sided=True)
        if min(left, right) > 0:
            h = min(left, right) / 2
            return _numerics.central_derivative(f, t, h, one_sided=False)
        return _numerics.central_derivative(f, t, right / 4, one_sided=True)

    # -- sampling (used by the axiom verifier) ------------------------------

    @abstractmethod
    def sample_point(self, u: float, lo: float, hi: float) -> float | None:
        """Map ``u`` in [0, 1) to a scale point inside ``[lo, hi]`` (None if empty)."""

    def special_points(self, lo: float, hi: float) -> list[float]:
        """Structurally interesting points (interval endpoints) inside ``[lo, hi]``."""
        return []


# ---------------------------------------------------------------------------
# Interval unions
# ---------------------------------------------------------------------------


class _IntervalUnion(TimeScale):
    def __init__(self, intervals: Sequence[tuple[float, float]]):
        ivs = [(float(lo), float(hi)) for lo, hi in intervals]
        if not ivs:
            raise ValueError("a time scale must be nonempty")
        for lo, hi in ivs:
            if lo > hi or math.isnan(lo) or math.isnan(hi):
                raise ValueError(f"bad interval [{lo}, {hi}]")
        for (_, h1), (l2, _) in zip(ivs, ivs[1:]):
            if not h1 < l2:
                raise ValueError("intervals must be disjoint and sorted")
        self.intervals: tuple[tuple[float, float], ...] = tuple(ivs)
        self._los = [lo for lo, _ in ivs]

    def __repr__(self) -> str:
        return f"{type(self).__name__}({list(self.intervals)!r})"

    @property
    def inf(self) -> float:
        return self.intervals[0][0]

    @property
    def sup(self) -> float:
        return self.intervals[-1][1]

    def _locate(self, t: float) -> int:
        """Index of the interval that contains ``t`` (up to tolerance) or -1."""
        i = bisect.bisect_right(self._los, t) - 1
        for j in (i, i + 1):
            if 0 <= j < len(self.intervals):
                lo, hi = self.intervals[j]
                tol = self.snap_tol * max(1.0, abs(t))
                if lo - tol <= t <= hi + tol:
                    return j
        return -1

    def snap(self, t: float) -> float:
        t = float(t)
        j = self._locate(t)
        if j < 0:
            raise PointNotInScale(t, self)
        lo, hi = self.intervals[j]
        tol = self.snap_tol * max(1.0, abs(t))
        if abs(t - hi) <= tol:
            return hi
        if abs(t - lo) <= tol:
            return lo
        return t

    def _sigma(self, t: float) -> float:
        j = self._locate(t)
        lo, hi = self.intervals[j]
        if t < hi:
            return t
        return self.intervals[j + 1][0]

    def _dense_room(self, t: float) -> tuple[float, float]:
        lo, hi = self.intervals[self._locate(t)]
        return t - lo, hi - t

    def pieces(self, a: float, b: float) -> list[Piece]:
        out: list[Piece] = []
        if a >= b:
            return out
        for j, (lo, hi) in enumerate(self.intervals):
            if hi < a:
                continue
            if lo >= b:
                break
            dlo, dhi = max(a, lo), min(b, hi)
            if dhi > dlo:
                out.append(Piece("dense", dlo, dhi))
            if a <= hi < b and j + 1 < len(self.intervals):
                out.append(Piece("point", hi, self.intervals[j + 1][0]))
        return out

    def _grid(self, a: float, b: float, real_step: float) -> list[float]:
        pts: list[float] = []
        for lo, hi in self.intervals:
            if hi < a:
                continue
            if lo > b:
                break
            dlo, dhi = max(a, lo), min(b, hi)
            if dhi > dlo:
                n = max(1, math.ceil((dhi - dlo) / real_step - 1e-9))
                seg = [dlo + (dhi - dlo) * k / n for k in range(n)] + [dhi]
            else:
                seg = [dlo]
            for p in seg:
                if not pts or p > pts[-1]:
                    pts.append(p)
        return pts

    def _clipped(self, lo: float, hi: float) -> list[tuple[float, float]]:
        return [(max(a, lo), min(b, hi)) for a, b in self.intervals if b >= lo and a <= hi]

    def sample_point(self, u: float, lo: float, hi: float) -> float | None:
        parts = self._clipped(lo, hi)
        if not parts:
            return None
        lengths = [b - a for a, b in parts]
        total = sum(lengths)
        if total == 0.0:
            return parts[min(int(u * len(parts)), len(parts) - 1)][0]
        target = u * total
        for (a, b), ln in zip(parts, lengths):
            if target <= ln:
                return self.snap(a + target)
            target -= ln
        return parts[-1][1]

    def special_points(self, lo: float, hi: float) -> list[float]:
        pts = []
        for a, b in self.intervals:
            for p in (a, b):
                if math.isfinite(p) and lo <= p <= hi:
                    pts.append(p)
        return sorted(set(pts))


class RealInterval(_IntervalUnion):
    """A real interval ``[lo, hi]``; the default is the whole real line."""

    def __init__(self, lo: float = -INF, hi: float = INF):
        super().__init__([(lo, hi)])
        self.lo, self.hi = float(lo), float(hi)

    def __repr__(self) -> str:
        return f"RealInterval({self.lo!r}, {self.hi!r})"


class UnionOfIntervals(_IntervalUnion):
    """Disjoint sorted closed real intervals, e.g. ``(-inf, 0] U [1, inf)``."""


class FiniteGrid(_IntervalUnion):
    """A strictly increasing finite list of points."""

    def __init__(self, points: Sequence[float]):
        pts = [float(p) for p in points]
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("FiniteGrid points must be strictly increasing")
        super().__init__([(p, p) for p in pts])
        self.points = tuple(pts)

    def __repr__(self) -> str:
        return f"FiniteGrid({list(self.points)!r})"


# ---------------------------------------------------------------------------
# Index lattices
# ---------------------------------------------------------------------------


class Lattice(TimeScale):
    """A discrete scale whose points are ``point(k)`` for integer ``k >= k_min``."""

    k_min: int | None = None

    @abstractmethod
    def point(self, k: int) -> float: ...

    @abstractmethod
    def _raw_index(self, t: float) -> int: ...

    def index(self, t: float) -> int:
        """Integer index of a lattice point; raises ``PointNotInScale``."""
        t = float(t)
        try:
            k = self._raw_index(t)
        except (ValueError, OverflowError):
            raise PointNotInScale(t, self) from None
        if self.k_min is not None and k < self.k_min:
            raise PointNotInScale(t, self)
        if abs(self.point(k) - t) > self.snap_tol * max(1.0, abs(t)):
            raise PointNotInScale(t, self)
        return k

    def snap(self, t: float) -> float:
        return self.point(self.index(t))

    def same(self, s: float, t: float) -> bool:
        try:
            return self.index(s) == self.index(t)
        except PointNotInScale:
            return super().same(s, t)

    @property
    def inf(self) -> float:
        return -INF if self.k_min is None else self.point(self.k_min)

    @property
    def sup(self) -> float:
        return INF

    def _sigma(self, t: float) -> float:
        return self.point(self.index(t) + 1)

    def pieces(self, a: float, b: float) -> list[Piece]:
        ka, kb = self.index(a), self.index(b)
        return [Piece("point", self.point(k), self.point(k + 1)) for k in range(ka, kb)]

    def iter_indices(self, a: float, b: float) -> Iterator[int]:
        return iter(range(self.index(a), self.index(b) + 1))

    def _grid(self, a: float, b: float, real_step: float) -> list[float]:
        return [self.point(k) for k in self.iter_indices(a, b)]

    def index_bounds(self, lo: float, hi: float) -> tuple[int, int] | None:
        """Smallest and largest index whose point lies in ``[lo, hi]``."""
        raise NotImplementedError

    def sample_point(self, u: float, lo: float, hi: float) -> float | None:
        bounds = self.index_bounds(lo, hi)
        if bounds is None:
            return None
        k0, k1 = bounds
        k = k0 + min(int(u * (k1 - k0 + 1)), k1 - k0)
        return self.point(k)


class StepLattice(Lattice):
    """``origin + step * Z``."""

    def __init__(self, step: float = 1.0, origin: float = 0.0):
        if not step > 0:
            raise ValueError("step must be positive")
        self.step = float(step)
        self.origin = float(origin)

    def __repr__(self) -> str:
        return f"StepLattice(step={self.step!r}, origin={self.origin!r})"

    def point(self, k: int) -> float:
        return self.origin + k * self.step

    def _raw_index(self, t: float) -> int:
        return round((t - self.origin) / self.step)

    def index_bounds(self, lo: float, hi: float) -> tuple[int, int] | None:
        k0 = math.ceil((lo - self.origin) / self.step - 1e-9)
        k1 = math.floor((hi - self.origin) / self.step + 1e-9)
        return (k0, k1) if k0 <= k1 else None


class UnitLattice(StepLattice):
    """``origin + Z``."""

    def __init__(self, origin: float = 0.0):
        super().__init__(1.0, origin)

    def __repr__(self) -> str:
        return f"UnitLattice(origin={self.origin!r})"


class QLattice(Lattice):
    """``{q**n : n in Z} U {0}``; zero is the only right-dense point.

    Index ``n`` refers to ``q**n``; zero has no index and is handled apart.
    """

    def __init__(self, q: float = 2.0):
        if not q > 1:
            raise ValueError("q must exceed 1")
        self.q = float(q)
        self._logq = math.log(self.q)

    def __repr__(self) -> str:
        return f"QLattice(q={self.q!r})"

    def point(self, k: int) -> float:
        return self.q**k

    def _raw_index(self, t: float) -> int:
        if t <= 0:
            raise ValueError("nonpositive")
        return round(math.log(t) / self._logq)

    @property
    def inf(self) -> float:
        return 0.0

    def snap(self, t: float) -> float:
        if abs(t) <= self.snap_tol:
            return 0.0
        return super().snap(t)

    def same(self, s: float, t: float) -> bool:
        if abs(s) <= self.snap_tol or abs(t) <= self.snap_tol:
            return abs(s) <= self.snap_tol and abs(t) <= self.snap_tol
        return super().same(s, t)

    def _sigma(self, t: float) -> float:
        if t == 0.0:
            return 0.0
        return super()._sigma(t)

    def pieces(self, a: float, b: float) -> list[Piece]:
        if self.snap(a) == 0.0 and b > 0:
            raise UnboundedGrid("[0, b] on a q-lattice has infinitely many points")
        if self.snap(a) == 0.0:
            return []
        return super().pieces(a, b)

    def iter_indices(self, a: float, b: float) -> Iterator[int]:
        if self.snap(a) == 0.0:
            raise UnboundedGrid("[0, b] on a q-lattice has infinitely many points")
        return super().iter_indices(a, b)

    def _grid(self, a: float, b: float, real_step: float) -> list[float]:
        if a == 0.0 and b == 0.0:
            return [0.0]
        return super()._grid(a, b, real_step)

    def index_bounds(self, lo: float, hi: float) -> tuple[int, int] | None:
        # below this the spacing drops under the snap tolerance and points merge with 0
        lo = max(lo, 2 * self.snap_tol * self.q / (self.q - 1))
        if hi < lo:
            return None
        k0 = math.ceil(math.log(lo) / self._logq - 1e-9)
        k1 = math.floor(math.log(hi) / self._logq + 1e-9)
        return (k0, k1) if k0 <= k1 else None


class SqrtNaturals(Lattice):
    """``{sqrt(n) : n = 0, 1, 2, ...}``, indexed by ``n``."""

    k_min = 0

    def __repr__(self) -> str:
        return "SqrtNaturals()"

    def point(self, k: int) -> float:
        return math.sqrt(k)

    def _raw_index(self, t: float) -> int:
        if t < -self.snap_tol:
            raise ValueError("negative")
        return round(t * t)

    def index_bounds(self, lo: float, hi: float) -> tuple[int, int] | None:
        if hi < 0:
            return None
        k0 = math.ceil(max(lo, 0.0) ** 2 - 1e-9)
        k1 = math.floor(hi**2 + 1e-9)
        return (k0, k1) if k0 <= k1 else None


# ---------------------------------------------------------------------------
# Grid functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values of a function at strictly increasing points of a time scale.

    ``knots`` are points where the sampled function may fail to be smooth
    (method-of-steps breakpoints); dense differentiation and integration never
    reach across them. ``slopes``, when present, are derivative values used for
    cubic Hermite interpolation between dense nodes.
    """

    points: np.ndarray
    values: np.ndarray
    scale: TimeScale
    knots: tuple[float, ...] = ()
    slopes: np.ndarray | None = None
    _scattered: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if pts.ndim != 1 or pts.shape != vals.shape:
            raise ValueError("points and values must be 1-D arrays of equal length")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)
        scattered = np.zeros(len(pts), dtype=bool)
        for i in range(len(pts) - 1):
            sig = self.scale.sigma(pts[i])
            if sig > pts[i]:
                if not self.scale.same(sig, pts[i + 1]):
                    raise ValueError(f"grid skips sigma({pts[i]!r}) = {sig!r}")
                scattered[i] = True
        object.__setattr__(self, "_scattered", scattered)

    def __len__(self) -> int:
        return len(self.points)

    def node(self, t: float) -> int | None:
        """Index of the grid node equal to ``t`` (snap tolerance), else None."""
        pts = self.points
        i = int(np.searchsorted(pts, t))
        for j in (i - 1, i):
            if 0 <= j < len(pts) and self.scale.same(pts[j], t):
                return j
        return None

    def runs(self) -> list[tuple[int, int]]:
        """Maximal dense runs ``(i, j)`` (node indices, inclusive) split at knots."""
        knot_idx = {self.node(k) for k in self.knots}
        out = []
        i = None
        for n in range(len(self.points) - 1):
            if self._scattered[n]:
                if i is not None:
                    out.append((i, n))
                    i = None
                continue
            if i is None:
                i = n
            elif n in knot_idx:
                out.append((i, n))
                i = n
        if i is not None:
            out.append((i, len(self.points) - 1))
        return out

    def __call__(self, t: float) -> float:
        j = self.node(t)
        if j is not None:
            return float(self.values[j])
        pts = self.points
        i = int(np.searchsorted(pts, t)) - 1
        if i < 0 or i >= len(pts) - 1:
            raise PointNotInScale(t, self.scale)
        if self._scattered[i]:
            raise PointNotInScale(t, self.scale)
        t0, t1 = pts[i], pts[i + 1]
        y0, y1 = self.values[i], self.values[i + 1]
        dt = t1 - t0
        s = (t - t0) / dt
        if self.slopes is not None:
            m0, m1 = self.slopes[i] * dt, self.slopes[i + 1] * dt
            h00 = (1 + 2 * s) * (1 - s) ** 2
            h10 = s * (1 - s) ** 2
            h01 = s * s * (3 - 2 * s)
            h11 = s * s * (s - 1)
            return float(h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1)
        return float(y0 + s * (y1 - y0))

    def delta_derivatives(self, values: np.ndarray | None = None) -> np.ndarray:
        """Delta derivative at every node except the last (last entry is nan)."""
        y = self.values if values is None else np.asarray(values, dtype=float)
        pts = self.points
        out = np.full(len(pts), np.nan)
        for i in np.flatnonzero(self._scattered):
            out[i] = (y[i + 1] - y[i]) / (pts[i + 1] - pts[i])
        for i, j in self.runs():
            d = _numerics.run_derivative(pts[i : j + 1], y[i : j + 1])
            out[i:j] = d[:-1]
        return out

    def cumulative_integral(self, values: np.ndarray | None = None) -> np.ndarray:
        """``F[k] = delta integral from points[0] to points[k]`` of the samples."""
        y = self.values if values is None else np.asarray(values, dtype=float)
        pts = self.points
        inc = np.zeros(len(pts))
        for i in np.flatnonzero(self._scattered):
            inc[i + 1] = (pts[i + 1] - pts[i]) * y[i]
        for i, j in self.runs():
            c = _numerics.run_cumulative(pts[i : j + 1], y[i : j + 1])
            inc[i + 1 : j + 1] = np.diff(c)
        return np.cumsum(inc)

    @property
    def scattered(self) -> np.ndarray:
        return self._scattered.copy()
