"""Exception hierarchy shared by every tsdelay module."""

from __future__ import annotations


class TSDelayError(Exception):
    """Base class for all errors raised by tsdelay."""


# -- time scales -------------------------------------------------------------


class PointNotInScale(TSDelayError, ValueError):
    def __init__(self, t: float, scale: object = None):
        self.t = t
        self.scale = scale
        super().__init__(f"point {t!r} is not in {scale!r}")


class AtSupremum(TSDelayError, ValueError):
    def __init__(self, t: float):
        self.t = t
        super().__init__(f"{t!r} is the supremum of the time scale; no forward jump")


class EmptyInterval(TSDelayError, ValueError):
    pass


class UnboundedGrid(TSDelayError, ValueError):
    """The requested interval holds infinitely many scattered points."""


# -- shifts / delay functions --------------------------------------------------


class OutOfDomain(TSDelayError, ValueError):
    def __init__(self, s: float, t: float, detail: str = ""):
        self.s = s
        self.t = t
        msg = f"(s, t) = ({s!r}, {t!r}) is outside the shift domain"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class StickyPointViolation(TSDelayError, ValueError):
    pass


class InsufficientSamples(TSDelayError, ValueError):
    pass


class DelayFunctionError(TSDelayError, ValueError):
    """The supplied shift/size pair does not generate a delay function."""


# -- calculus ----------------------------------------------------------------


class NotRegressive(TSDelayError, ValueError):
    def __init__(self, t: float | None = None, value: float | None = None):
        self.t = t
        self.value = value
        if t is None:
            super().__init__("function is not regressive on the interval")
        else:
            super().__init__(f"1 + mu(t) p(t) = {value!r} at t = {t!r}; not regressive")


NotRegressiveAt = NotRegressive


class ZeroValueAt(TSDelayError, ValueError):
    def __init__(self, t: float):
        self.t = t
        super().__init__(f"x({t!r}) = 0; |x| is not delta differentiable there")


class DenseSignChange(TSDelayError, ValueError):
    pass


# -- solver ------------------------------------------------------------------


class HistoryGap(TSDelayError, ValueError):
    pass


class NonMonotoneGrid(TSDelayError, ValueError):
    pass


class OutOfHistoryRegime(TSDelayError, ValueError):
    pass


# -- stability lab -----------------------------------------------------------


class PreconditionNotVerified(TSDelayError, ValueError):
    pass


class EmptyAlphaInterval(TSDelayError, ValueError):
    pass


class Condition228aFails(TSDelayError, ValueError):
    pass


class ZeroBAt(TSDelayError, ValueError):
    def __init__(self, t: float):
        self.t = t
        super().__init__(f"b(delta_+(h, t)) = 0 at t = {t!r}")


class NonPositiveV0(TSDelayError, ValueError):
    pass


# -- configuration -----------------------------------------------------------


class ConfigError(TSDelayError, ValueError):
    pass


# -- coefficient expressions -------------------------------------------------


class ExprSyntaxError(TSDelayError, ValueError):
    """Malformed expression text; ``str`` is ``offset:message``."""

    def __init__(self, offset: int, message: str, expected: frozenset[str] = frozenset()):
        self.offset = offset
        self.message = message
        self.expected = expected
        super().__init__(f"{offset}:{message}")


class EvalError(TSDelayError, ValueError):
    """Domain error while evaluating; ``span`` locates the failing subexpression."""

    def __init__(self, message: str, span: tuple[int, int] | None = None, text: str | None = None):
        self.message = message
        self.span = span
        self.text = text
        where = f"{span[0]}:" if span is not None else ""
        super().__init__(f"{where}{message}" + (f" in {text!r}" if text else ""))
