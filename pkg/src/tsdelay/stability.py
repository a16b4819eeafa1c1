"""Lyapunov functionals, stability/instability conditions and certificates."""

from __future__ import annotations

import io
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from tsdelay.calculus import grid_exponential, ts_exponential
from tsdelay.errors import (
    Condition228aFails,
    EmptyAlphaInterval,
    NonPositiveV0,
    PreconditionNotVerified,
    ZeroBAt,
)
from tsdelay.shifts import MINUS, PLUS
from tsdelay.solver import DelayProblem, Trajectory, build_grid, solve
from tsdelay.timescale import GridFunction, Lattice

ATOL = 1e-12
DIVERGENCE_THRESHOLD = 10.0

EXP_STABLE_21 = "ExpStable_Thm21"
EXP_STABLE_21A = "ExpStable_Thm21a"
BOUNDED_23 = "Bounded_Thm23"
UNSTABLE_31 = "Unstable_Thm31"
NOT_CERTIFIED = "NotCertified"


# ---------------------------------------------------------------------------
# Per-node data
# ---------------------------------------------------------------------------


class LabGrid:
    """Coefficient data on the solver grid, extended two delay steps past ``T``.

    The solver grid for ``T`` is a prefix of this grid, so trajectory values
    line up with the first ``len(trajectory)`` nodes. The extension makes
    ``delta_+(h, t)`` of every trajectory node a node as well.
    """

    def __init__(self, p: DelayProblem, real_step: float | None = None):
        self.p = p
        self.real_step = real_step
        df, scale = p.delay, p.scale
        base, _ = build_grid(p, real_step)
        self.m = len(base)  # nodes shared with the trajectory
        t_ext = df.advance(df.advance(float(base[-1])))
        ext = replace(p, T=t_ext)
        pts, knots = build_grid(ext, real_step)
        if len(pts) < self.m or not np.array_equal(pts[: self.m], base):
            raise RuntimeError("extended grid does not extend the solver grid")
        self.t = pts
        self.knots = knots
        self.gf = GridFunction(pts, np.zeros(len(pts)), scale, knots)
        n = len(pts)
        self.i0 = int(np.argmin(np.abs(pts - p.t0)))
        self.mu = np.array([scale.mu(t) for t in pts])
        self.a = np.array([p.a(t) for t in pts])
        self.b = np.array([p.b(t) for t in pts])
        self.b_plus = np.array([p.b(df.advance(t)) for t in pts])
        self.dminus = np.full(n, np.nan)
        self.dderiv = np.full(n, np.nan)
        for k in range(n):
            t = float(pts[k])
            if df.system.in_domain(MINUS, df.h, t):
                d = df.system._raw(MINUS, df.h, scale.snap(t))
                if d is not None and df.system.in_star(d):
                    self.dminus[k] = d
                    if k >= self.i0:
                        self.dderiv[k] = df.derivative(t)
        self.beta = pts - self.dminus
        self.Q = self.a + self.b_plus
        self.jidx = np.array([self.node(d) if not math.isnan(d) else -1 for d in self.dminus])

    # -- helpers --------------------------------------------------------------

    def node(self, t: float) -> int:
        j = self.gf.node(t)
        return -1 if j is None else j

    def cumulative(self, values: np.ndarray) -> np.ndarray:
        """Delta-integral of node samples from the first node."""
        v = np.zeros(len(self.t))
        v[: len(values)] = values
        return self.gf.cumulative_integral(v)

    def at(self, cum: np.ndarray, integrand: np.ndarray, t: float) -> float:
        """Value of a cumulative integral at ``t`` (a node, or cubic Hermite between nodes)."""
        j = self.node(t)
        if j >= 0:
            return float(cum[j])
        i = int(np.searchsorted(self.t, t)) - 1
        t0, t1 = self.t[i], self.t[i + 1]
        dt = t1 - t0
        s = (t - t0) / dt
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return float(h00 * cum[i] + h10 * dt * integrand[i] + h01 * cum[i + 1] + h11 * dt * integrand[i + 1])

    def window(self, cum: np.ndarray, integrand: np.ndarray, k: int) -> float:
        """Integral over ``[delta_-(h, t_k), t_k]``."""
        j = self.jidx[k]
        lower = float(cum[j]) if j >= 0 else self.at(cum, integrand, float(self.dminus[k]))
        return float(cum[k]) - lower

    def forward(self, stop: int | None = None) -> range:
        """Node indices of ``[t0, T]`` (the trajectory part)."""
        return range(self.i0, self.m if stop is None else stop)

    def sigma_values(self, values: np.ndarray) -> np.ndarray:
        """``f(sigma(t_k))`` for node samples ``f``: next node if scattered, same node if dense."""
        out = values.copy()
        sc = self.gf.scattered
        idx = np.flatnonzero(sc)
        out[idx] = values[idx + 1]
        return out


def _margin(x: np.ndarray) -> float:
    return float(np.min(x)) if len(x) else math.inf


def _first_fail(t: np.ndarray, slack: np.ndarray, atol: float) -> float | None:
    bad = np.flatnonzero(slack < -atol)
    return float(t[bad[0]]) if len(bad) else None


@dataclass
class ConditionReport:
    name: str
    holds: bool
    margins: dict[str, float] = field(default_factory=dict)
    first_failure: float | None = None
    details: dict[str, object] = field(default_factory=dict)

    def line(self) -> str:
        status = "holds" if self.holds else "fails"
        ms = " ".join(f"{k}={v!r}" for k, v in sorted(self.margins.items()))
        tail = f" first_failure={self.first_failure!r}" if self.first_failure is not None else ""
        return f"{self.name} {status} {ms}{tail}".rstrip()


# ---------------------------------------------------------------------------
# Functionals
# ---------------------------------------------------------------------------


@dataclass
class FunctionalCache:
    """Node values of ``Q, beta, A, H, V`` on ``[t0, T]`` (index 0 is ``t0``)."""

    t: np.ndarray
    x: np.ndarray
    Q: np.ndarray
    beta: np.ndarray
    A: np.ndarray
    H: np.ndarray
    H_8a: np.ndarray
    V: np.ndarray
    lam: float


def _check_lab(lab: LabGrid | None, p: DelayProblem, tr: Trajectory | None = None) -> LabGrid:
    if lab is None:
        lab = LabGrid(p, tr.real_step if tr is not None else None)
    if tr is not None and len(tr.t) != lab.m:
        raise ValueError("trajectory grid does not match the lab grid")
    return lab


def functionals(p: DelayProblem, tr: Trajectory, lam: float, lab: LabGrid | None = None) -> FunctionalCache:
    """``A``, ``H`` (two ways) and ``V = A^2 + lam H`` along a trajectory."""
    lab = _check_lab(lab, p, tr)
    m = lab.m
    x = tr.x
    g = lab.b_plus[:m] * x
    k = g * g
    G = lab.cumulative(g)
    K = lab.cumulative(k)
    L = lab.cumulative(K[:m])
    sig_t = lab.sigma_values(lab.t)[:m]
    S = lab.cumulative(sig_t * k)
    idx = list(lab.forward())
    A, H, H8 = [], [], []
    for i in idx:
        d = float(lab.dminus[i])
        A.append(x[i] + lab.window(G, g, i))
        Kd = lab.at(K, k, d) if lab.jidx[i] < 0 else float(K[lab.jidx[i]])
        H.append(lab.beta[i] * K[i] - lab.window(L, K, i))
        H8.append(lab.window(S, sig_t * k, i) - d * (K[i] - Kd))
    A = np.array(A)
    H = np.array(H)
    return FunctionalCache(
        t=lab.t[idx], x=x[idx], Q=lab.Q[idx], beta=lab.beta[idx], A=A, H=H, H_8a=np.array(H8),
        V=A * A + lam * H, lam=lam,
    )


def initial_functional(p: DelayProblem, lam: float, lab: LabGrid | None = None) -> float:
    """``V(t0)`` from the history alone."""
    lab = lab or LabGrid(p)
    x = np.array([p.psi(t) for t in lab.t[: lab.i0 + 1]])
    g = lab.b_plus[: lab.i0 + 1] * x
    k = g * g
    G, K = lab.cumulative(g), lab.cumulative(k)
    L = lab.cumulative(K[: lab.i0 + 1])
    i = lab.i0
    A = x[i] + lab.window(G, g, i)
    H = lab.beta[i] * K[i] - lab.window(L, K, i)
    return float(A * A + lam * H)


def instability_functional(p: DelayProblem, x: np.ndarray, D: float, lab: LabGrid) -> np.ndarray:
    """``V = A^2 - D int_{delta_-(h,t)}^t b(delta_+(h,s))^2 x(s)^2`` on ``[t0, T]`` of ``x``."""
    n = len(x)
    g = lab.b_plus[:n] * x
    k = g * g
    G, K = lab.cumulative(g), lab.cumulative(k)
    out = []
    for i in range(lab.i0, n):
        A = x[i] + lab.window(G, g, i)
        out.append(A * A - D * lab.window(K, k, i))
    return np.array(out)


# ---------------------------------------------------------------------------
# Conditions
# ---------------------------------------------------------------------------


def _range_mask(lab: LabGrid, t_range: tuple[float, float] | None) -> np.ndarray:
    idx = np.array(list(lab.forward()))
    if t_range is not None:
        lo, hi = t_range
        idx = idx[(lab.t[idx] >= lo - 1e-12) & (lab.t[idx] <= hi + 1e-12)]
    return idx


def check_condition_11(
    p: DelayProblem,
    lam: float,
    t_range: tuple[float, float] | None = None,
    *,
    strict: bool = False,
    lab: LabGrid | None = None,
    atol: float = ATOL,
) -> ConditionReport:
    """Two-sided bound on ``Q`` plus ``a in R+`` and ``Q in R``.

    ``strict`` uses ``beta + (lam beta + mu)`` in the lower denominator instead
    of ``beta + lam (beta + mu)``.
    """
    lab = lab or LabGrid(p)
    idx = _range_mask(lab, t_range)
    beta, mu, dd, Q, bp = lab.beta[idx], lab.mu[idx], lab.dderiv[idx], lab.Q[idx], lab.b_plus[idx]
    denom = beta + (lam * beta + mu) if strict else beta + lam * (beta + mu)
    lower = -lam * dd / denom
    upper = -lam * (beta + mu) * bp**2 - mu * Q**2
    reg_a = 1.0 + mu * lab.a[idx]
    reg_q = 1.0 + mu * Q
    lo_slack, up_slack = Q - lower, upper - Q
    holds = (
        bool(np.all(lo_slack >= -atol))
        and bool(np.all(up_slack >= -atol))
        and bool(np.all(reg_a > 0))
        and bool(np.all(reg_q != 0))
    )
    fails = [f for f in (_first_fail(lab.t[idx], lo_slack, atol), _first_fail(lab.t[idx], up_slack, atol)) if f is not None]
    return ConditionReport(
        name="condition11" + ("-strict" if strict else ""),
        holds=holds,
        margins={
            "lower": _margin(lo_slack),
            "upper": _margin(up_slack),
            "a_regressive": _margin(reg_a),
            "Q_regressive": _margin(np.abs(reg_q)),
        },
        first_failure=min(fails) if fails else None,
        details={"endpoints": (float(lower[0]), float(upper[0])), "Q": float(Q[0]), "lam": lam},
    )


def alpha_candidates(p: DelayProblem, count: int = 8) -> list[float]:
    """Points of ``(t0, h)`` to try for alpha, largest first."""
    scale, t0, h = p.scale, p.t0, p.h
    if isinstance(scale, Lattice) or scale.is_isolated_between(t0, h):
        pts = [float(t) for t in scale.grid(t0, h)[1:-1]]
        return sorted(pts, reverse=True)
    out = []
    for j in range(count - 1, 0, -1):
        c = t0 + (h - t0) * j / count
        if scale.contains(c):
            out.append(scale.snap(c))
    return out


def check_condition_2_8(
    p: DelayProblem,
    alpha: float,
    lam: float,
    t_range: tuple[float, float] | None = None,
    *,
    lab: LabGrid | None = None,
    atol: float = ATOL,
) -> ConditionReport:
    """Domain condition for ``(alpha, t)`` and the midpoint inequality on ``[alpha, T]``.

    Also checks ``Lambda > 0`` and ``xi > 1``.
    """
    if not alpha_candidates(p):
        raise EmptyAlphaInterval(f"({p.t0!r}, {p.h!r}) contains no point of the time scale")
    lab = lab or LabGrid(p)
    sys, scale = p.delay.system, p.scale
    df = p.delay
    alpha = scale.snap(alpha)
    if not (p.t0 < alpha < p.h):
        return ConditionReport("condition2.8", False, details={"reason": "alpha outside (t0, h)"})
    idx = _range_mask(lab, t_range)
    idx = idx[lab.t[idx] >= alpha - 1e-12 * max(1.0, abs(alpha))]
    domain_ok = True
    slack, Lam, xi = [], [], []
    first = None
    for i in idx:
        t = float(lab.t[i])
        if not (sys.in_domain(MINUS, alpha, t) and sys.in_domain(PLUS, alpha, t)):
            domain_ok = False
            first = first if first is not None else t
            continue
        da = sys.minus(alpha, t)
        dh = float(lab.dminus[i])
        dha = df(da)
        s = (da + dha) / 2 - dh
        lam_t = dh - dha
        slack.append(s)
        Lam.append(lam_t)
        xi.append(1 + lam * lam_t / lab.beta[i])
        if first is None and (s < -atol or lam_t <= 0):
            first = t
    slack, Lam, xi = np.array(slack), np.array(Lam), np.array(xi)
    holds = domain_ok and bool(np.all(slack >= -atol)) and bool(np.all(Lam > 0)) and bool(np.all(xi > 1))
    return ConditionReport(
        name="condition2.8",
        holds=holds,
        margins={"midpoint": _margin(slack), "Lambda": _margin(Lam), "xi_minus_1": _margin(xi - 1)},
        first_failure=first,
        details={"alpha": alpha, "domain": "(alpha, t) in D+- for all grid t", "domain_ok": domain_ok,
                 "xi_min": _margin(xi), "xi_max": float(np.max(xi)) if len(xi) else math.nan},
    )


# ---------------------------------------------------------------------------
# Bounds (scalar routes, evaluated straight from the formulas)
# ---------------------------------------------------------------------------


def _Q(p: DelayProblem) -> Callable[[float], float]:
    df = p.delay
    return lambda s: p.a(s) + p.b(df.advance(s))


def xi_at(p: DelayProblem, lam: float, alpha: float, t: float) -> float:
    df = p.delay
    dh = df(t)
    lam_t = dh - df(p.delay.system.minus(alpha, t))
    return 1 + lam * lam_t / (t - dh)


def bound_thm21(
    p: DelayProblem, lam: float, alpha: float, V0: float, t: float, *, M: float | None = None,
    psi_norm: float | None = None, verified: bool = True,
) -> float:
    """Upper bound on ``|x(t)|``: the exponential form for ``t >= alpha``,
    the history-growth form on ``[t0, alpha)``."""
    if not verified:
        raise PreconditionNotVerified("conditions for the alpha bound were not verified")
    scale, df = p.scale, p.delay
    t = scale.snap(t)
    alpha = scale.snap(alpha)
    if not alpha_candidates(p):
        raise PreconditionNotVerified(f"({p.t0!r}, {p.h!r}) is empty; no alpha exists")
    if t >= alpha:
        xi = xi_at(p, lam, alpha, t)
        expo = 0.5 * scale.delta_integral(_Q(p), p.t0, df.system.minus(alpha, t))
        return math.sqrt(2 * V0 / (1 - 1 / xi)) * math.exp(expo)
    M = df.bound_M(p.T) if M is None else M
    norm = p.psi_norm() if psi_norm is None else psi_norm

    def inner(s: float) -> float:
        return abs(p.b(s) / (1 + scale.mu(s) * p.a(s))) * math.exp(-scale.delta_integral(p.a, p.t0, s))

    return norm * math.exp(scale.delta_integral(p.a, p.t0, t)) * (1 + M * scale.delta_integral(inner, p.t0, t))


def bound_thm21a(p: DelayProblem, lam: float, V0: float, t: float, *, verified: bool = True) -> float:
    """``sqrt((1 + 1/lam) V0) exp(int_{t0}^t Q / 2)``."""
    from tsdelay.shifts import isolated_gap

    if not verified or not isolated_gap(p.delay):
        raise PreconditionNotVerified("the isolated-gap bound needs (t0, h) to be empty and the lambda condition to hold")
    return math.sqrt((1 + 1 / lam) * V0) * math.exp(0.5 * p.scale.delta_integral(_Q(p), p.t0, t))


def eta_at(p: DelayProblem, lam: float, t: float, tol: float = 1e-11) -> float:
    """``e_a(t,t0) / (1 + lam int_{delta_-(h,t)}^t e_a(delta_+(h,s), t0) ds)`` by quadrature."""
    scale, df = p.scale, p.delay
    ea = ts_exponential(p.a, t, p.t0, scale, tol)
    inner = scale.delta_integral(lambda s: ts_exponential(p.a, df.advance(s), p.t0, scale, tol), df(t), t, tol)
    return ea / (1 + lam * inner)


# ---------------------------------------------------------------------------
# Certificate data
# ---------------------------------------------------------------------------


@dataclass
class StabilityCertificate:
    verdict: str
    params: dict[str, float] = field(default_factory=dict)
    margins: dict[str, float] = field(default_factory=dict)
    reports: list[ConditionReport] = field(default_factory=list)
    bound: Callable[[float], float] | None = None
    bound_kind: str = ""  # "upper" or "lower"
    notes: list[str] = field(default_factory=list)
    divergence: dict[str, float] = field(default_factory=dict)
    grid_t: np.ndarray | None = None
    grid_bound: np.ndarray | None = None
    grid_V: np.ndarray | None = None
    trajectory: Trajectory | None = None
    lab: LabGrid | None = None

    @property
    def certified(self) -> bool:
        return self.verdict != NOT_CERTIFIED

    def to_text(self) -> str:
        out = io.StringIO()
        out.write(f"verdict: {self.verdict}\n")
        for k, v in self.params.items():
            out.write(f"param {k} = {v!r}\n")
        for k in sorted(self.margins):
            out.write(f"margin {k} = {self.margins[k]!r}\n")
        for k in sorted(self.divergence):
            out.write(f"divergence {k} = {self.divergence[k]!r}\n")
        if self.bound_kind:
            out.write(f"bound: {self.bound_kind} ({self._bound_expr()})\n")
        for r in self.reports:
            out.write(f"check {r.line()}\n")
        for n in self.notes:
            out.write(f"note: {n}\n")
        return out.getvalue()

    def _bound_expr(self) -> str:
        return {
            EXP_STABLE_21: "sqrt(2 V(t0) / (1 - 1/xi(t))) exp(int_{t0}^{delta_-(alpha,t)} Q / 2) for t >= alpha; "
            "|psi| e^{int a} [1 + M int |b/(1+mu a)| e^{-int a}] before alpha",
            EXP_STABLE_21A: "sqrt((1 + 1/lambda) V(t0)) exp(int_{t0}^t Q / 2)",
            BOUNDED_23: "V(t0, x_t0) e_gamma(t, t0)",
            UNSTABLE_31: "sqrt(C V(t0) int_{t0}^t b(delta_+(h,s))^2), C = D - beta0",
        }.get(self.verdict, "")

    def to_csv(self) -> str:
        tr, lab = self.trajectory, self.lab
        out = io.StringIO()
        out.write("t,x,V,bound,Q,beta\n")
        if tr is None or lab is None:
            return out.getvalue()
        n = len(self.grid_t) if self.grid_t is not None else 0
        for j, i in enumerate(lab.forward()):
            V = self.grid_V[j] if self.grid_V is not None and j < len(self.grid_V) else math.nan
            bd = self.grid_bound[j] if self.grid_bound is not None and j < n else math.nan
            row = [lab.t[i], tr.x[i], V, bd, lab.Q[i], lab.beta[i]]
            out.write(",".join("" if math.isnan(float(v)) else repr(float(v)) for v in row) + "\n")
        return out.getvalue()


# ---------------------------------------------------------------------------
# Grid-evaluated bounds
# ---------------------------------------------------------------------------


def _grid_bound_thm21(p: DelayProblem, lab: LabGrid, lam: float, alpha: float, V0: float) -> np.ndarray:
    sys = p.delay.system
    idx = list(lab.forward())
    Qc = lab.cumulative(lab.Q)
    a_c = lab.cumulative(lab.a)
    M = float(np.nanmax(lab.dderiv[idx]))
    norm = p.psi_norm(lab.real_step)
    w = np.abs(lab.b / (1 + lab.mu * lab.a)) * np.exp(-(a_c - a_c[lab.i0]))
    W = lab.cumulative(w)
    out = []
    for i in idx:
        t = float(lab.t[i])
        if t >= alpha or p.scale.same(t, alpha):
            da = sys.minus(alpha, t)
            dh = float(lab.dminus[i])
            xi = 1 + lam * (dh - p.delay(da)) / lab.beta[i]
            q = lab.at(Qc, lab.Q, da) - Qc[lab.i0]
            out.append(math.sqrt(2 * V0 / (1 - 1 / xi)) * math.exp(0.5 * q))
        else:
            out.append(norm * math.exp(a_c[i] - a_c[lab.i0]) * (1 + M * (W[i] - W[lab.i0])))
    return np.array(out)


def _grid_bound_thm21a(lab: LabGrid, lam: float, V0: float) -> np.ndarray:
    idx = list(lab.forward())
    Qc = lab.cumulative(lab.Q)
    return math.sqrt((1 + 1 / lam) * V0) * np.exp(0.5 * (Qc[idx] - Qc[lab.i0]))


@dataclass
class Thm23Data:
    eta: np.ndarray  # on [t0, T] nodes
    eta_sigma: np.ndarray
    gamma: np.ndarray
    bound: np.ndarray
    V0: float
    M_tilde: float
    condition_slack: np.ndarray


def thm23_grid(p: DelayProblem, lab: LabGrid, lam: float, history: np.ndarray | None = None) -> Thm23Data:
    """eta, gamma, the slack of the eta condition and the bound on the forward nodes."""
    df = p.delay
    n = len(lab.t)
    i0 = lab.i0
    # e_a(t, t0) on nodes >= t0 of the extended grid
    fwd = GridFunction(lab.t[i0:], np.zeros(n - i0), p.scale, lab.knots)
    E = np.full(n, np.nan)
    E[i0:] = grid_exponential(fwd, lab.a[i0:])
    # y(s) = e_a(delta_+(h, s), t0) for nodes whose advance is a node
    y = np.full(n, np.nan)
    for k in range(n):
        j = lab.node(df.advance(float(lab.t[k])))
        if j >= 0:
            y[k] = E[j]
    valid = np.flatnonzero(~np.isnan(y))
    last = int(valid[-1]) + 1
    Y = lab.cumulative(np.nan_to_num(y[:last]))
    eta = np.full(n, np.nan)
    for k in range(i0, n):
        if k < last and lab.jidx[k] >= 0:
            eta[k] = E[k] / (1 + lam * (Y[k] - Y[lab.jidx[k]]))
    idx = np.array(list(lab.forward()))
    eta_s = lab.sigma_values(eta)
    M = float(np.nanmax(lab.dderiv[idx]))
    M_t = max(1.0, M)
    gamma = lab.a + lam * M_t * eta_s
    slack = lam * eta_s[idx] * lab.dderiv[idx] - np.abs(lab.b[idx])
    fwd_m = GridFunction(lab.t[i0 : lab.m], np.zeros(lab.m - i0), p.scale, lab.knots)
    eg = grid_exponential(fwd_m, gamma[i0 : lab.m])
    hist = history if history is not None else np.array([p.psi(t) for t in lab.t[: i0 + 1]])
    xs = np.abs(hist)
    Hc = lab.cumulative(xs)
    V0 = abs(hist[i0]) + lam * eta[i0] * (Hc[i0] - Hc[0])
    return Thm23Data(eta[idx], eta_s[idx], gamma[idx], V0 * eg, float(V0), M_t, slack)


def eta_and_bound_thm23(p: DelayProblem, lam: float, t: float, lab: LabGrid | None = None) -> tuple[float, float, float]:
    """``(eta(t), gamma(t), bound(t))`` at a grid node ``t`` of ``[t0, T]``."""
    lab = lab or LabGrid(p)
    data = thm23_grid(p, lab, lam)
    bad = np.flatnonzero(data.condition_slack < -ATOL)
    if len(bad):
        raise Condition228aFails(f"|b(t)| > lam eta(sigma(t)) delta_-^D(h,t) at t = {lab.t[lab.i0 + bad[0]]!r}")
    k = lab.node(t)
    if k < lab.i0 or k >= lab.m:
        raise ValueError(f"{t!r} is not a node of [t0, T]")
    j = k - lab.i0
    return float(data.eta[j]), float(data.gamma[j]), float(data.bound[j])


# ---------------------------------------------------------------------------
# Instability
# ---------------------------------------------------------------------------


@dataclass
class InstabilityReport:
    holds: bool
    margins: dict[str, float]
    beta0: float
    C: float
    V0: float
    divergence: float
    lower_bound: Callable[[float], float]
    grid_lower: np.ndarray
    first_failure: float | None = None

    def to_report(self) -> ConditionReport:
        return ConditionReport("instability", self.holds, dict(self.margins), self.first_failure,
                               {"beta0": self.beta0, "C": self.C, "V0": self.V0, "divergence": self.divergence})


def check_instability(
    p: DelayProblem,
    D: float,
    t_range: tuple[float, float] | None = None,
    *,
    threshold: float = DIVERGENCE_THRESHOLD,
    lab: LabGrid | None = None,
    atol: float = ATOL,
) -> InstabilityReport:
    """``beta < D <= Q / b(delta_+)^2``, ``beta <= beta0 < D``, divergence proxy and ``V(t0) > 0``."""
    if not D > 0:
        raise ValueError("D must be positive")
    lab = lab or LabGrid(p)
    idx = _range_mask(lab, t_range)
    bp = lab.b_plus[idx]
    zero = np.flatnonzero(bp == 0)
    if len(zero):
        raise ZeroBAt(float(lab.t[idx[zero[0]]]))
    beta = lab.beta[idx]
    ratio = lab.Q[idx] / bp**2
    beta0 = float(np.max(beta))
    b2 = lab.b_plus**2
    B = lab.cumulative(b2)
    divergence = float(B[idx[-1]] - B[lab.i0])
    hist = np.array([p.psi(t) for t in lab.t[: lab.i0 + 1]])
    V0 = float(instability_functional(p, hist, D, lab)[0])
    if not V0 > 0:
        raise NonPositiveV0(f"V(t0) = {V0!r} is not positive for this history")
    C = D - beta0
    margins = {
        "beta_below_D": float(D - beta0),
        "D_below_ratio": _margin(ratio - D),
        "divergence_excess": divergence - threshold,
        "V0": V0,
    }
    holds = margins["beta_below_D"] > 0 and margins["D_below_ratio"] >= -atol and divergence >= threshold
    grid_lower = np.sqrt(np.maximum(C, 0.0) * V0 * (B[list(lab.forward())] - B[lab.i0]))
    first = _first_fail(lab.t[idx], ratio - D, atol)

    def lower(t: float) -> float:
        integral = p.scale.delta_integral(lambda s: p.b(p.delay.advance(s)) ** 2, p.t0, t)
        return math.sqrt(max(C, 0.0) * V0 * integral)

    return InstabilityReport(holds, margins, beta0, C, V0, divergence, lower, grid_lower, first)


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------


DEFAULT_LAMBDAS = tuple(2.0**k for k in range(6, -7, -1))


@dataclass(frozen=True)
class SearchGrids:
    """Parameter grids for ``certify``; ``None`` means the default grid."""

    lambdas: Sequence[float] | None = None
    alphas: Sequence[float] | None = None
    Ds: Sequence[float] | None = None
    threshold: float = DIVERGENCE_THRESHOLD
    jobs: int = 1
    real_step: float | None = None


def _divergence_21(p: DelayProblem, lab: LabGrid, lam: float, alpha: float | None) -> float:
    dens = lam * (lab.beta + lab.mu) * lab.b_plus**2 + lab.mu * lab.Q**2
    C = lab.cumulative(dens)
    t_last = float(lab.t[lab.m - 1])
    end = p.delay.system.minus(alpha, t_last) if alpha is not None else t_last
    return lab.at(C, dens, end) - float(C[lab.i0])


def _try_thm21(p, lab, lam, alphas, cond11):
    for alpha in alphas:
        rep = check_condition_2_8(p, alpha, lam, lab=lab)
        if rep.holds:
            return alpha, rep
    return None


def certify(p: DelayProblem, search: SearchGrids | None = None, tr: Trajectory | None = None) -> StabilityCertificate:
    """Try the alpha theorem, the isolated-gap theorem, the eta theorem and the
    instability theorem in that order; the first whose checks all pass wins."""
    from tsdelay.shifts import isolated_gap

    search = search or SearchGrids()
    lab = LabGrid(p, search.real_step)
    tr = tr or solve(p, search.real_step)
    lambdas = list(search.lambdas) if search.lambdas is not None else list(DEFAULT_LAMBDAS)
    alphas_all = alpha_candidates(p)
    alphas = list(search.alphas) if search.alphas is not None else alphas_all
    gap = isolated_gap(p.delay)
    notes = []

    def cond11(lam):
        return check_condition_11(p, lam, lab=lab)

    if search.jobs > 1:
        with ThreadPoolExecutor(max_workers=search.jobs) as ex:
            reports = list(ex.map(cond11, lambdas))
    else:
        reports = [cond11(lam) for lam in lambdas]
    good = [(lam, r) for lam, r in zip(lambdas, reports) if r.holds]

    # exponential stability with an alpha in (t0, h)
    if alphas_all:
        for lam, r11 in good:
            found = _try_thm21(p, lab, lam, alphas, r11)
            if found is None:
                continue
            alpha, r28 = found
            V0 = initial_functional(p, lam, lab)
            fn = functionals(p, tr, lam, lab)
            grid_b = _grid_bound_thm21(p, lab, lam, alpha, V0)
            div = _divergence_21(p, lab, lam, alpha)
            M = p.delay.bound_M(p.T, search.real_step)
            norm = p.psi_norm(search.real_step)
            notes.append("domain condition read as (alpha, t) in D+-")
            return StabilityCertificate(
                EXP_STABLE_21,
                params={"lambda": lam, "alpha": alpha, "V0": V0, "M": M},
                margins={**{f"11.{k}": v for k, v in r11.margins.items()}, **{f"2.8.{k}": v for k, v in r28.margins.items()}},
                reports=[r11, r28],
                bound=lambda t, lam=lam, alpha=alpha, V0=V0: bound_thm21(p, lam, alpha, V0, t, M=M, psi_norm=norm),
                bound_kind="upper",
                notes=notes,
                divergence={"integral": div, "threshold": search.threshold, "exceeds": float(div >= search.threshold)},
                grid_t=lab.t[list(lab.forward())], grid_bound=grid_b, grid_V=fn.V, trajectory=tr, lab=lab,
            )

    # exponential stability when (t0, h) is empty
    if gap:
        for lam, r11 in good:
            V0 = initial_functional(p, lam, lab)
            fn = functionals(p, tr, lam, lab)
            div = _divergence_21(p, lab, lam, None)
            return StabilityCertificate(
                EXP_STABLE_21A,
                params={"lambda": lam, "V0": V0},
                margins={f"11.{k}": v for k, v in r11.margins.items()},
                reports=[r11],
                bound=lambda t, lam=lam, V0=V0: bound_thm21a(p, lam, V0, t),
                bound_kind="upper",
                divergence={"integral": div, "threshold": search.threshold, "exceeds": float(div >= search.threshold)},
                grid_t=lab.t[list(lab.forward())], grid_bound=_grid_bound_thm21a(lab, lam, V0), grid_V=fn.V,
                trajectory=tr, lab=lab,
            )

    # bounded (and decaying) via eta
    a_ok = bool(np.all(1 + lab.mu[list(lab.forward())] * lab.a[list(lab.forward())] > 0))
    if a_ok:
        hist = tr.x[: lab.i0 + 1]
        for lam in lambdas:
            data = thm23_grid(p, lab, lam, hist)
            slack = float(np.min(data.condition_slack))
            if slack < -ATOL or float(np.max(data.gamma)) > ATOL:
                continue
            rep = ConditionReport("condition2.28a", True, {"slack": slack, "gamma_max_neg": -float(np.max(data.gamma))})
            notes.append("bound in the V(t0, x_t0) e_gamma(t, t0) form; gamma <= 0 required on the grid")
            bvals = data.bound
            tgrid = lab.t[list(lab.forward())]
            return StabilityCertificate(
                BOUNDED_23,
                params={"lambda": lam, "V0": data.V0, "M_tilde": data.M_tilde},
                margins={"2.28a": slack, "gamma": -float(np.max(data.gamma))},
                reports=[rep],
                bound=lambda t, tg=tgrid, bv=bvals: _lookup(tg, bv, t),
                bound_kind="upper",
                notes=notes,
                grid_t=tgrid, grid_bound=bvals, trajectory=tr, lab=lab,
            )

    # instability
    idx = list(lab.forward())
    bp = lab.b_plus[idx]
    if np.all(bp != 0):
        beta0 = float(np.max(lab.beta[idx]))
        rmin = float(np.min(lab.Q[idx] / bp**2))
        Ds = list(search.Ds) if search.Ds is not None else [beta0 + k * (rmin - beta0) / 8 for k in range(1, 9)] if rmin > beta0 else []
        for D in Ds:
            try:
                rep = check_instability(p, D, threshold=search.threshold, lab=lab)
            except NonPositiveV0:
                continue
            if not rep.holds:
                continue
            Vv = instability_functional(p, tr.x, D, lab)
            notes.append("instability additionally requires V(t0) > 0")
            return StabilityCertificate(
                UNSTABLE_31,
                params={"D": D, "beta0": rep.beta0, "C": rep.C, "V0": rep.V0},
                margins=rep.margins,
                reports=[rep.to_report()],
                bound=rep.lower_bound,
                bound_kind="lower",
                notes=notes,
                divergence={"integral": rep.divergence, "threshold": search.threshold,
                            "exceeds": float(rep.divergence >= search.threshold)},
                grid_t=lab.t[idx], grid_bound=rep.grid_lower, grid_V=Vv, trajectory=tr, lab=lab,
            )

    return StabilityCertificate(NOT_CERTIFIED, reports=[r for r in reports[:1]], trajectory=tr, lab=lab)


def _lookup(tg: np.ndarray, vals: np.ndarray, t: float) -> float:
    i = int(np.searchsorted(tg, t))
    for j in (i - 1, i):
        if 0 <= j < len(tg) and abs(tg[j] - t) <= 1e-9 * max(1.0, abs(t)):
            return float(vals[j])
    return float(np.interp(t, tg, vals))


# ---------------------------------------------------------------------------
# Conditions from the earlier literature, for comparison
# ---------------------------------------------------------------------------


def _is_translation(p: DelayProblem, lab: LabGrid) -> bool:
    """True on a single real interval with ``delta_-(h, t) = t - h``."""
    from tsdelay.timescale import RealInterval

    if not isinstance(p.scale, RealInterval):
        return False
    ok = ~np.isnan(lab.dminus)
    return bool(np.all(np.abs(lab.dminus[ok] - (lab.t[ok] - p.h)) <= 1e-12 * np.maximum(1.0, np.abs(lab.t[ok]))))


def _sta7_values(p: DelayProblem, lab: LabGrid) -> np.ndarray:
    i0, m = lab.i0, lab.m
    pv = lab.b_plus[:m]
    ap = np.abs(pv)
    P = lab.cumulative(ap)
    W = np.array([lab.window(P, ap, k) for k in range(i0, m)])
    fwd = GridFunction(lab.t[i0:m], np.zeros(m - i0), p.scale, lab.knots)
    E = grid_exponential(fwd, pv[i0:])
    om = np.abs(pv[i0:] / (1 + lab.mu[i0:m] * pv[i0:]))
    inner = fwd.cumulative_integral(om * W / E)
    return W + E * inner


def check_literature_conditions(
    p: DelayProblem,
    N: float | None = None,
    lam: float | None = None,
    alpha: float | None = None,
    *,
    threshold: float = DIVERGENCE_THRESHOLD,
    lab: LabGrid | None = None,
    atol: float = ATOL,
) -> list[ConditionReport]:
    """Evaluate (sta), (sta5), (sta 6), (stap), (sta7), (sta8) and (sta7-a) on the grid.

    ``N`` defaults to ``max |b|`` for (sta) and to ``max`` of the (sta7)
    quantity otherwise. ``lam`` defaults to the first value of the default
    grid that satisfies (sta5).
    """
    lab = lab or LabGrid(p)
    idx = np.array(list(lab.forward()))
    t = lab.t[idx]
    a, b, pv = lab.a[idx], lab.b[idx], lab.b_plus[idx]
    beta, mu, dd = lab.beta[idx], lab.mu[idx], lab.dderiv[idx]
    out = []

    # (sta)
    n_sta = float(np.max(np.abs(b))) if N is None else N
    s1, s2 = n_sta - np.abs(b), -n_sta - a
    ok = bool(np.all(s1 >= -atol) and np.all(s2 > 0))
    ff = [f for f in (_first_fail(t, s1, atol), _first_fail(t, s2 - atol, 0.0)) if f is not None]
    out.append(ConditionReport("sta", ok, {"b_bound": _margin(s1), "a_below": _margin(s2)}, min(ff) if ff else None, {"N": n_sta}))

    # (sta5) and (sta 6)
    lams = [lam] if lam is not None else list(DEFAULT_LAMBDAS)
    chosen, best = None, None
    for lm in lams:
        lower = -lm * dd / (beta + lm * (beta + mu))
        upper = -(pv**2) * (lm * beta + (1 + lm) * mu)
        lo_s, up_s = pv - lower, upper - pv
        rep = ConditionReport(
            "sta5",
            bool(np.all(lo_s >= -atol) and np.all(up_s >= -atol)),
            {"lower": _margin(lo_s), "upper": _margin(up_s)},
            min([f for f in (_first_fail(t, lo_s, atol), _first_fail(t, up_s, atol)) if f is not None], default=None),
            {"lam": lm, "left_endpoint": (float(lower[0]), float(pv[0]), float(upper[0]))},
        )
        if best is None:
            best = rep
        if rep.holds:
            chosen, best = lm, rep
            break
    out.append(best)
    lm = chosen if chosen is not None else lams[0]
    dens = (lm * lab.beta + (1 + lm) * lab.mu) * lab.b_plus**2
    C = lab.cumulative(dens)
    if alpha is None and alpha_candidates(p):
        for al in alpha_candidates(p):
            if check_condition_2_8(p, al, lm, lab=lab).holds:
                alpha = al
                break
    t_last = float(lab.t[lab.m - 1])
    end = p.delay.system.minus(alpha, t_last) if alpha is not None else t_last
    div = lab.at(C, dens, end) - float(C[lab.i0])
    out.append(ConditionReport("sta6", div >= threshold, {"divergence_excess": div - threshold}, None,
                               {"integral": div, "lam": lm, "alpha": alpha}))

    # (stap): p != 0 and e_p(t, t0) -> 0
    nonzero = bool(np.all(pv != 0))
    fwd = GridFunction(t, np.zeros(len(t)), p.scale, lab.knots)
    try:
        ep = grid_exponential(fwd, pv)
        decay = -math.log(abs(float(ep[-1]))) if ep[-1] != 0 else math.inf
    except Exception:
        decay = -math.inf
    out.append(ConditionReport("stap", nonzero and decay >= threshold, {"decay_excess": decay - threshold},
                               None if nonzero else float(t[np.flatnonzero(pv == 0)[0]]), {"p_nonzero": nonzero}))

    # (sta7)
    if nonzero:
        S7 = _sta7_values(p, lab)
        n7 = 1.0 - 1e-15 if N is None else N
        bad = np.flatnonzero(S7 > n7 + atol)
        out.append(ConditionReport("sta7", n7 < 1 and not len(bad), {"N_minus_max": n7 - float(np.max(S7))},
                                   float(t[bad[0]]) if len(bad) else None, {"max": float(np.max(S7)), "N": n7}))
    else:
        out.append(ConditionReport("sta7", False, details={"reason": "p vanishes on the grid"}))

    # (sta8): closed form of (sta7) for a == 0 and constant p on the real line
    if _is_translation(p, lab) and np.all(a == 0) and np.all(pv == pv[0]) and pv[0] < 0:
        hp = p.h * abs(float(pv[0]))
        target = 2 - 1 / hp
        if hp < 0.5 or target <= 0:
            first = None if hp < 0.5 else float(t[0])
        else:
            first = max(math.log(target) / float(pv[0]), float(t[0]))
        sup = 2 * hp
        out.append(ConditionReport("sta8", first is None, {"sup_minus_1": sup - 1.0}, first,
                                   {"formula": "h|p|(2 - e^{p t})", "threshold_t": first}))

    # (sta7-a): real line with delta_-(h,t) = t - h only
    if _is_translation(p, lab):
        lo_s = a + pv + 1 / (2 * p.h)
        up_s = -p.h * pv**2 - (a + pv)
        ff = [f for f in (_first_fail(t, lo_s, atol), _first_fail(t, up_s, atol)) if f is not None]
        out.append(ConditionReport("sta7-a", bool(np.all(lo_s >= -atol) and np.all(up_s >= -atol)),
                                   {"lower": _margin(lo_s), "upper": _margin(up_s)}, min(ff) if ff else None))
    return out
