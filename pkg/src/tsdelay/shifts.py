"""Shift operators, delay functions and a sampling verifier for the shift axioms."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from tsdelay.errors import (
    DelayFunctionError,
    InsufficientSamples,
    OutOfDomain,
    PointNotInScale,
    StickyPointViolation,
)
from tsdelay.timescale import (
    Lattice,
    QLattice,
    RealInterval,
    SqrtNaturals,
    StepLattice,
    TimeScale,
    UnionOfIntervals,
)

MINUS, PLUS = "minus", "plus"


class ShiftSystem:
    """A backward/forward shift pair on a time scale, tied to an initial point ``t0``.

    Subclasses implement ``_raw(direction, s, t)``, returning the shifted value
    or ``None`` when ``(s, t)`` lies outside the natural domain of the formula.
    Membership of the result in the scale is *not* assumed: the domains D+-
    only require the shift size and argument to be admissible, and the axiom
    verifier reports results that leave the scale as closure failures.
    """

    name = "shift"

    def __init__(self, scale: TimeScale, t0: float, sticky: float | None = None, window: tuple[float, float] | None = None):
        self.scale = scale
        self.t0 = scale.snap(t0)
        self.sticky = sticky
        lo = max(self.t0 - 10.0, scale.inf)
        self.window = window if window is not None else (lo, self.t0 + 10.0)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r}, t0={self.t0!r})"

    # -- points -------------------------------------------------------------

    def same(self, a: float, b: float) -> bool:
        return self.scale.same(a, b)

    def is_sticky(self, t: float) -> bool:
        return self.sticky is not None and self.same(t, self.sticky)

    def in_star(self, t: float) -> bool:
        """Membership in the working set (the scale without its sticky point)."""
        return self.scale.contains(t) and not self.is_sticky(t)

    def is_shift_size(self, s: float) -> bool:
        return self.scale.contains(s) and not self.is_sticky(s) and (s >= self.t0 or self.same(s, self.t0))

    # -- shifts -------------------------------------------------------------

    def _raw(self, direction: str, s: float, t: float) -> float | None:
        raise NotImplementedError

    def in_domain(self, direction: str, s: float, t: float) -> bool:
        if direction not in (MINUS, PLUS):
            raise ValueError(f"direction must be {MINUS!r} or {PLUS!r}")
        if not (self.is_shift_size(s) and self.in_star(t)):
            return False
        return self._raw(direction, self.scale.snap(s), self.scale.snap(t)) is not None

    def shift(self, direction: str, s: float, t: float) -> float:
        """Return ``delta_-(s, t)`` or ``delta_+(s, t)``."""
        if direction not in (MINUS, PLUS):
            raise ValueError(f"direction must be {MINUS!r} or {PLUS!r}")
        if not self.is_shift_size(s):
            raise OutOfDomain(s, t, "shift size must lie in [t0, inf) of the scale")
        if not self.scale.contains(t):
            raise OutOfDomain(s, t, "argument is not in the time scale")
        if self.is_sticky(t):
            raise StickyPointViolation(f"{t!r} is the sticky point")
        r = self._raw(direction, self.scale.snap(s), self.scale.snap(t))
        if r is None:
            raise OutOfDomain(s, t)
        if self.is_sticky(r):
            raise StickyPointViolation(f"shift of {t!r} by {s!r} hit the sticky point")
        return r

    def minus(self, s: float, t: float) -> float:
        return self.shift(MINUS, s, t)

    def plus(self, s: float, t: float) -> float:
        return self.shift(PLUS, s, t)

    def delay_derivative(self, h: float, t: float) -> float | None:
        """Closed-form delta derivative of ``delta_-(h, .)`` at ``t``, if known."""
        return None

    def rebase(self, lam: float) -> ShiftSystem:
        return ComposedShiftSystem(self, lam)


def shift(sys: ShiftSystem, direction: str, s: float, t: float) -> float:
    return sys.shift(direction, s, t)


class CoordinateShiftSystem(ShiftSystem):
    """Shifts that are additive in a coordinate ``c``: ``c(delta_-+(s, t)) = c(t) -+ c(s) +- c(t0)``.

    The built-in systems on R, hZ, qZ and sqrt(N) are of this form (identity,
    index, exponent and square coordinates respectively). On index lattices the
    arithmetic is on integers and therefore exact. Rebasing only moves ``c(t0)``.
    """

    def __init__(
        self,
        scale: TimeScale,
        t0: float,
        *,
        name: str,
        sticky: float | None = None,
        window: tuple[float, float] | None = None,
        derivative: Callable[[ShiftSystem, float, float], float] | None = None,
    ):
        super().__init__(scale, t0, sticky, window)
        self.name = name
        self._derivative = derivative
        self.c0 = self.coord(self.t0)

    def coord(self, t: float):
        if isinstance(self.scale, SqrtNaturals):
            return self.scale.index(t)
        if isinstance(self.scale, Lattice):
            return self.scale.index(t)
        return t

    def from_coord(self, c) -> float | None:
        if isinstance(self.scale, SqrtNaturals):
            return math.sqrt(c) if c >= 0 else None
        if isinstance(self.scale, Lattice):
            return self.scale.point(c)
        return c

    def _raw(self, direction: str, s: float, t: float) -> float | None:
        if isinstance(self.scale, QLattice) and t == 0.0:
            return 0.0
        cs, ct = self.coord(s), self.coord(t)
        c = ct - cs + self.c0 if direction == MINUS else ct + cs - self.c0
        return self.from_coord(c)

    def is_shift_size(self, s: float) -> bool:
        if not self.scale.contains(s) or self.is_sticky(s):
            return False
        return self.coord(self.scale.snap(s)) >= self.c0

    def delay_derivative(self, h: float, t: float) -> float | None:
        if self._derivative is None:
            return None
        return self._derivative(self, h, t)

    def rebase(self, lam: float) -> ShiftSystem:
        lam = self.scale.snap(lam)
        if not (self.is_shift_size(lam) and lam > self.t0):
            raise OutOfDomain(lam, self.t0, "new initial point must lie in (t0, inf)")
        span = self.window[1] - self.window[0]
        return CoordinateShiftSystem(
            self.scale,
            lam,
            name=f"{self.name}@{lam!r}",
            sticky=self.sticky,
            window=(self.window[0], max(self.window[1], lam + span / 2)),
            derivative=self._derivative,
        )


class FunctionShiftSystem(ShiftSystem):
    """Shifts given by two callables, for systems that are not coordinate-additive."""

    def __init__(
        self,
        scale: TimeScale,
        t0: float,
        minus: Callable[[float, float], float | None],
        plus: Callable[[float, float], float | None],
        *,
        name: str,
        sticky: float | None = None,
        window: tuple[float, float] | None = None,
        derivative: Callable[[float, float], float] | None = None,
    ):
        super().__init__(scale, t0, sticky, window)
        self.name = name
        self._fns = {MINUS: minus, PLUS: plus}
        self._derivative = derivative

    def _raw(self, direction: str, s: float, t: float) -> float | None:
        return self._fns[direction](s, t)

    def delay_derivative(self, h: float, t: float) -> float | None:
        return None if self._derivative is None else self._derivative(h, t)


class ComposedShiftSystem(ShiftSystem):
    """The system re-associated with a new initial point ``lam``:
    ``new_delta_+-(s, t) = delta_-+(lam, delta_+-(s, t))``."""

    def __init__(self, base: ShiftSystem, lam: float):
        lam = base.scale.snap(lam)
        if not (base.is_shift_size(lam) and lam > base.t0):
            raise OutOfDomain(lam, base.t0, "new initial point must lie in (t0, inf)")
        span = base.window[1] - base.window[0]
        super().__init__(base.scale, lam, base.sticky, (base.window[0], max(base.window[1], lam + span / 2)))
        self.base = base
        self.lam = lam
        self.name = f"{base.name}@{lam!r}"

    def _raw(self, direction: str, s: float, t: float) -> float | None:
        back = PLUS if direction == MINUS else MINUS
        b = self.base
        if not (b.is_shift_size(s) and b.in_domain(direction, s, t)):
            return None
        r = b._raw(direction, s, t)
        if r is None or not b.in_star(r) or not b.in_domain(back, self.lam, r):
            return None
        return b._raw(back, self.lam, b.scale.snap(r))


def rebase_initial_point(sys: ShiftSystem, lam: float) -> ShiftSystem:
    return sys.rebase(lam)


# ---------------------------------------------------------------------------
# Built-in systems
# ---------------------------------------------------------------------------


def _unit_derivative(sys: ShiftSystem, h: float, t: float) -> float:
    return 1.0


def _q_derivative(sys: ShiftSystem, h: float, t: float) -> float:
    # delta_-(h, t) = t * t0 / h is linear in t
    return sys.t0 / h


def real_system(t0: float = 0.0) -> CoordinateShiftSystem:
    """``delta_-+(s, t) = t -+ s +- t0`` on the real line."""
    return CoordinateShiftSystem(RealInterval(), t0, name="R", derivative=_unit_derivative)


def step_system(step: float = 1.0, t0: float = 0.0) -> CoordinateShiftSystem:
    """``delta_-+(s, t) = t -+ s +- t0`` on ``step * Z``."""
    scale = StepLattice(step, 0.0)
    return CoordinateShiftSystem(
        scale, t0, name=f"{step!r}Z", window=(t0 - 20 * step, t0 + 20 * step), derivative=_unit_derivative
    )


def integer_system(t0: float = 0.0) -> CoordinateShiftSystem:
    return step_system(1.0, t0)


def q_system(q: float = 2.0, t0: float = 1.0) -> CoordinateShiftSystem:
    """``delta_-(s, t) = t t0 / s`` and ``delta_+(s, t) = s t / t0`` on the q-lattice; 0 is sticky."""
    scale = QLattice(q)
    return CoordinateShiftSystem(
        scale, t0, name=f"{q!r}^Z", sticky=0.0, window=(t0 * q**-12, t0 * q**12), derivative=_q_derivative
    )


def sqrt_system(t0: float = 0.0) -> CoordinateShiftSystem:
    """``delta_-+(s, t) = sqrt(t^2 -+ s^2 +- t0^2)`` on ``{sqrt(n)}``."""
    return CoordinateShiftSystem(SqrtNaturals(), t0, name="sqrtN", window=(0.0, max(20.0, 2 * t0)))


def _rs_minus(s: float, t: float) -> float:
    return t / s if t >= 0 else s * t


def _rs_plus(s: float, t: float) -> float:
    return s * t if t >= 0 else t / s


def _rs_derivative(h: float, t: float) -> float:
    return 1.0 / h if t >= 0 else h


def real_scaling_system() -> FunctionShiftSystem:
    """Multiplicative shifts on the real line with ``t0 = 1`` and sticky point 0."""
    return FunctionShiftSystem(
        RealInterval(), 1.0, _rs_minus, _rs_plus, name="R-scaling", sticky=0.0, window=(-10.0, 10.0),
        derivative=_rs_derivative,
    )


def broken_q_system(q: float = 2.0) -> FunctionShiftSystem:
    """Additive shifts forced onto the q-lattice; results leave the lattice."""
    return FunctionShiftSystem(
        QLattice(q), 1.0, lambda s, t: t - s, lambda s, t: t + s, name="qZ-additive", sticky=0.0,
        window=(q**-6, q**6),
    )


def gap_counterexample_system() -> FunctionShiftSystem:
    """``t -+ s`` on ``(-inf, 0] U [1, inf)`` with ``t0 = 0``; generates no delay function."""
    scale = UnionOfIntervals([(-math.inf, 0.0), (1.0, math.inf)])
    return FunctionShiftSystem(
        scale, 0.0, lambda s, t: t - s, lambda s, t: t + s, name="gap", window=(-10.0, 10.0),
        derivative=lambda h, t: 1.0,
    )


# ---------------------------------------------------------------------------
# Delay functions
# ---------------------------------------------------------------------------


class DelayFunction:
    """``t -> delta_-(h, t)`` for a fixed shift size ``h`` in ``(t0, inf)``."""

    def __init__(self, system: ShiftSystem, h: float):
        scale = system.scale
        try:
            h = scale.snap(h)
        except PointNotInScale as exc:
            raise DelayFunctionError(f"shift size {h!r} is not in the time scale") from exc
        if not (system.is_shift_size(h) and h > system.t0):
            raise DelayFunctionError(f"shift size {h!r} must lie in (t0, inf) = ({system.t0!r}, inf)")
        if not system.in_domain(MINUS, h, system.t0):
            raise DelayFunctionError(f"delta_-({h!r}, t0) is undefined")
        start = system._raw(MINUS, h, system.t0)
        if start is None or not system.in_star(start):
            raise DelayFunctionError(f"delta_-({h!r}, t0) = {start!r} leaves the time scale")
        self.system = system
        self.h = h
        self.start = scale.snap(start)

    def __repr__(self) -> str:
        return f"DelayFunction({self.system!r}, h={self.h!r})"

    @property
    def scale(self) -> TimeScale:
        return self.system.scale

    @property
    def t0(self) -> float:
        return self.system.t0

    def __call__(self, t: float) -> float:
        return self.system.minus(self.h, t)

    def advance(self, t: float) -> float:
        """``delta_+(h, t)``, the inverse of the delay function."""
        return self.system.plus(self.h, t)

    def beta(self, t: float) -> float:
        return t - self(t)

    def derivative(self, t: float) -> float:
        """Delta derivative of ``delta_-(h, .)`` at ``t``."""
        t = self.scale.snap(t)
        closed = self.system.delay_derivative(self.h, t)
        if closed is not None:
            return closed
        sig, mu = self.scale.jump(t)
        if mu > 0:
            return (self(sig) - self(t)) / mu
        return self.scale.delta_derivative(self, t)

    def bound_M(self, horizon: float, real_step: float | None = None) -> float:
        """Supremum of the (positive) delay derivative over ``[t0, horizon]``."""
        pts = self.scale.grid(self.t0, horizon, real_step)
        return max(self.derivative(t) for t in pts[:-1]) if len(pts) > 1 else self.derivative(self.t0)


def delay_delta_derivative(df: DelayFunction, t: float) -> float:
    return df.derivative(t)


# ---------------------------------------------------------------------------
# Axiom verification
# ---------------------------------------------------------------------------

AXIOM_NAMES = (
    "closure",
    "P.1",
    "P.2",
    "P.3",
    "P.4",
    "P.5",
    "Lemma3.i",
    "Lemma3.ii",
    "Lemma3.iii",
    "Lemma3.iv",
    "Lemma3.v",
    "Lemma3.vi",
    "Lemma3.vii",
    "Lemma3.viii",
    "Lemma3.ix",
    "Lemma3.x",
    "sticky",
    "delay-less",
    "Corollary2",
    "structure",
)


@dataclass
class AxiomResult:
    name: str
    checked: int = 0
    counterexample: tuple[float, float] | None = None

    @property
    def passed(self) -> bool:
        return self.counterexample is None

    def line(self) -> str:
        if self.passed:
            return f"{self.name} PASS"
        s, t = self.counterexample
        return f"{self.name} FAIL ({s!r}, {t!r})"


@dataclass
class AxiomReport:
    system: str
    results: dict[str, AxiomResult] = field(default_factory=dict)
    pairs: int = 0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def __getitem__(self, name: str) -> AxiomResult:
        return self.results[name]

    def failures(self) -> list[str]:
        return [n for n, r in self.results.items() if not r.passed]

    def to_text(self) -> str:
        return "\n".join(r.line() for r in self.results.values()) + "\n"


@dataclass(frozen=True)
class Sampling:
    n: int = 1000
    seed: int = 0
    window: tuple[float, float] | None = None


class _Checker:
    def __init__(self, sys: ShiftSystem):
        self.sys = sys
        self.results = {name: AxiomResult(name) for name in AXIOM_NAMES}
        self._memo: dict[tuple[str, float, float], float | None] = {}
        self._star: dict[float, bool] = {}

    def record(self, name: str, ok: bool, pair: tuple[float, float]) -> None:
        r = self.results[name]
        r.checked += 1
        if not ok and r.counterexample is None:
            r.counterexample = pair

    def d(self, direction: str, s: float, t: float) -> float | None:
        """Shift if ``(s, t)`` is in the domain, else None (result may leave the scale)."""
        key = (direction, s, t)
        if key in self._memo:
            return self._memo[key]
        sys = self.sys
        r = None
        if sys.in_domain(direction, s, t):
            r = sys._raw(direction, sys.scale.snap(s), sys.scale.snap(t))
        self._memo[key] = r
        return r

    def in_star(self, t: float) -> bool:
        r = self._star.get(t)
        if r is None:
            r = self._star[t] = self.sys.in_star(t)
        return r

    def dd(self, direction: str, s: float, t: float) -> float | None:
        """Shift restricted to results inside the working set."""
        r = self.d(direction, s, t)
        if r is None or not self.in_star(r):
            return None
        return self.sys.scale.snap(r)


def _sample_tuples(sys: ShiftSystem, sampling: Sampling) -> list[tuple[float, float, float, float]]:
    scale = sys.scale
    lo, hi = sampling.window or sys.window
    lo = max(lo, scale.inf)
    halton = qmc.Halton(d=4, scramble=True, seed=sampling.seed)
    u = halton.random(sampling.n)
    out = []
    specials = [p for p in scale.special_points(lo, hi) if not sys.is_sticky(p)]
    base_t = [sys.t0, *specials]
    for i in range(sampling.n):
        s = scale.sample_point(u[i, 0], sys.t0, hi)
        s2 = scale.sample_point(u[i, 1], sys.t0, hi)
        t = scale.sample_point(u[i, 2], lo, hi)
        v = scale.sample_point(u[i, 3], lo, hi)
        if None in (s, s2, t, v):
            continue
        out.append((s, s2, t, v))
    if out:
        s0, s20, _, v0 = out[0]
        out[:0] = [(s0, s20, p, v0) for p in base_t]
    return out


def verify_axioms(sys: ShiftSystem, sample: Sampling | None = None, h: float | None = None) -> AxiomReport:
    """Check the shift axioms and their consequences on sampled points.

    Failures are data: each check keeps the first sampled pair that violates
    it. When ``h`` is given, the delay-function properties (delay-less,
    commutation with the forward jump, structure preservation) are checked
    for ``delta_-(h, .)`` on ``[t0, inf)``.
    """
    sampling = sample or Sampling()
    tuples = _sample_tuples(sys, sampling)
    chk = _Checker(sys)
    scale = sys.scale
    same = sys.same
    t0 = sys.t0
    admissible = 0

    for s, s2, t, v in tuples:
        dm, dp = chk.d(MINUS, s, t), chk.d(PLUS, s, t)
        if dm is not None or dp is not None:
            admissible += 1

        # closure: results of admitted pairs stay in the working set
        for r in (dm, dp):
            if r is not None:
                chk.record("closure", chk.in_star(r), (s, t))

        # P.1: strictly increasing in the second argument on T0 <= t < u
        a, b = sorted((t, v))
        if a < b and a >= s:
            for direction in (MINUS, PLUS):
                ra, rb = chk.d(direction, s, a), chk.d(direction, s, b)
                if ra is not None and rb is not None:
                    chk.record("P.1", ra < rb and not same(ra, rb), (s, a))

        # P.2: monotone in the shift size
        t1, t2 = sorted((s, s2))
        if t1 < t2 and not same(t1, t2):
            m1, m2 = chk.d(MINUS, t1, t), chk.d(MINUS, t2, t)
            if m1 is not None and m2 is not None:
                chk.record("P.2", m1 > m2 and not same(m1, m2), (t1, t))
            p1, p2 = chk.d(PLUS, t1, t), chk.d(PLUS, t2, t)
            if p1 is not None and p2 is not None:
                chk.record("P.2", p1 < p2 and not same(p1, p2), (t1, t))

        # P.3: delta_+(s, t0) = s and delta_+(t0, t) = t
        r = chk.d(PLUS, s, t0)
        chk.record("P.3", r is not None and same(r, s), (s, t0))
        if chk.in_star(t):
            r = chk.d(PLUS, t0, t)
            chk.record("P.3", r is not None and same(r, t), (t0, t))

        # P.4 and iii: inversion
        for direction, r in ((MINUS, dm), (PLUS, dp)):
            if r is None:
                continue
            if not chk.in_star(r):
                continue
            back = PLUS if direction == MINUS else MINUS
            rr = chk.d(back, s, r)
            ok = rr is not None and same(rr, t)
            chk.record("P.4", ok, (s, t))
            chk.record("Lemma3.iii", ok, (s, t))

        # P.5: commutation, where both one-sided shifts of t are admitted
        for direction, r in ((MINUS, dm), (PLUS, dp)):
            back = PLUS if direction == MINUS else MINUS
            if r is None or not chk.in_star(r):
                continue
            lhs = chk.d(back, s2, r)
            inner = chk.dd(back, s2, t)
            if lhs is None or inner is None:
                continue
            rhs = chk.d(direction, s, inner)
            chk.record("P.5", rhs is not None and same(lhs, rhs), (s, t))

        # i: delta_-(s, s) = t0
        r = chk.d(MINUS, s, s)
        chk.record("Lemma3.i", r is not None and same(r, t0), (s, s))

        # ii: delta_-(t0, t) = t
        if chk.in_star(t):
            r = chk.d(MINUS, t0, t)
            chk.record("Lemma3.ii", r is not None and same(r, t), (t0, t))

        # iv: delta_+(t, delta_-(s, t0)) = delta_-(s, t) for t >= t0
        if t >= t0 and dm is not None:
            inner = chk.dd(MINUS, s, t0)
            if inner is not None:
                lhs = chk.d(PLUS, t, inner)
                if lhs is not None:
                    chk.record("Lemma3.iv", same(lhs, dm), (s, t))

        # v: delta_+(u, t) = delta_+(t, u) on [t0, inf)^2
        if t >= t0 and sys.is_shift_size(t):
            x, y = chk.d(PLUS, s, t), chk.d(PLUS, t, s)
            if x is not None and y is not None:
                chk.record("Lemma3.v", same(x, y), (s, t))

        # vi and vii
        if t >= t0 and dp is not None:
            chk.record("Lemma3.vi", dp >= t0 or same(dp, t0), (s, t))
        if t >= s and dm is not None:
            chk.record("Lemma3.vii", dm >= t0 or same(dm, t0), (s, t))

        # viii: delta_+(s, .) increases across the forward jump of t
        if dp is not None and t < scale.sup:
            sig, mu = scale.jump(t)
            if mu > 0:
                nxt = chk.d(PLUS, s, sig)
                if nxt is not None:
                    chk.record("Lemma3.viii", nxt > dp and not same(nxt, dp), (s, t))
            else:
                eps = 1e-6 * max(1.0, abs(t))
                if scale.contains(t + eps):
                    nxt = chk.d(PLUS, s, t + eps)
                    if nxt is not None:
                        chk.record("Lemma3.viii", nxt > dp, (s, t))

        # ix: delta_+(delta_-(u, s), delta_-(s, v)) = delta_-(u, v), u <= s <= v
        u_, s_ = sorted((s, s2))
        if v >= s_:
            a1, a2 = chk.dd(MINUS, u_, s_), chk.dd(MINUS, s_, v)
            rhs = chk.d(MINUS, u_, v)
            if a1 is not None and a2 is not None and rhs is not None and sys.is_shift_size(a1):
                lhs = chk.d(PLUS, a1, a2)
                if lhs is not None:
                    chk.record("Lemma3.ix", same(lhs, rhs), (u_, v))

        # x: delta_-(s, t) = t0 forces s = t
        tt = chk.dd(PLUS, s, t0)
        if tt is not None:
            r = chk.d(MINUS, s, tt)
            if r is not None and same(r, t0):
                chk.record("Lemma3.x", same(s, tt), (s, tt))
        if dm is not None and same(dm, t0):
            chk.record("Lemma3.x", same(s, t), (s, t))

        # sticky point is fixed by every shift and lies below t0
        if sys.sticky is not None:
            ts = sys.sticky
            ok = ts < t0
            for direction in (MINUS, PLUS):
                r = sys._raw(direction, scale.snap(s), ts) if sys.is_shift_size(s) else None
                if r is not None:
                    ok = ok and same(r, ts)
            chk.record("sticky", ok, (s, ts))

        if h is not None and t >= t0 and chk.in_star(t):
            _check_delay(chk, h, t)

    if admissible < 100:
        raise InsufficientSamples(f"only {admissible} admissible (s, t) pairs sampled; need at least 100")

    report = AxiomReport(system=sys.name, pairs=admissible)
    for name, r in chk.results.items():
        if name in ("delay-less", "Corollary2", "structure") and h is None:
            continue
        if name == "sticky" and sys.sticky is None:
            continue
        report.results[name] = r
    return report


def _check_delay(chk: _Checker, h: float, t: float) -> None:
    sys = chk.sys
    scale = sys.scale
    d = chk.d(MINUS, h, t)
    if d is None:
        return
    inside = chk.in_star(d)
    chk.record("closure", inside, (h, t))
    chk.record("delay-less", d < t and not sys.same(d, t), (h, t))
    if not inside:
        chk.record("Corollary2", False, (h, t))
        chk.record("structure", False, (h, t))
        return
    d = scale.snap(d)
    sig = scale.sigma(t)
    lhs = chk.d(MINUS, h, sig)
    rhs = scale.sigma(d)
    chk.record("Corollary2", lhs is not None and sys.same(lhs, rhs), (h, t))
    chk.record("structure", (scale.mu(t) > 0) == (scale.mu(d) > 0), (h, t))


def isolated_gap(df: DelayFunction, samples: int = 200) -> bool:
    """True iff ``(t0, h)`` holds no point of the scale.

    When it does, ``sigma = delta_+(h, .)`` on ``[delta_-(h, t0), inf)`` is
    confirmed on the first ``samples`` points; a contradiction means the
    pair is inconsistent and raises ``DelayFunctionError``.
    """
    scale, t0, h = df.scale, df.t0, df.h
    if scale.mu(t0) == 0.0:
        return False
    sig = scale.sigma(t0)
    if sig < h and not scale.same(sig, h):
        return False
    t = df.start
    for _ in range(samples):
        sig = scale.sigma(t)
        if not scale.same(df.advance(t), sig):
            raise DelayFunctionError(f"sigma({t!r}) != delta_+(h, {t!r}) although (t0, h) is empty")
        if sig >= t0 and not scale.same(scale.sigma(df(sig)), sig):
            raise DelayFunctionError(f"sigma(delta_-(h, {sig!r})) != {sig!r}")
        t = sig
    return True
