"""Acceptance criteria A1-A11; the summary prints one PASS/FAIL line for each."""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from scipy.integrate import solve_ivp

from strategies import exprs
from tsdelay.calculus import (
    circle_minus,
    delayed_integral_direct,
    delayed_integral_split,
    interchange_double,
    leibniz_delay_derivative,
    leibniz_direct,
    ts_exponential,
)
from tsdelay.errors import ExprSyntaxError
from tsdelay.expr import format_expr, parse
from tsdelay.shifts import (
    DelayFunction,
    Sampling,
    broken_q_system,
    gap_counterexample_system,
    integer_system,
    isolated_gap,
    q_system,
    real_system,
    sqrt_system,
    step_system,
    verify_axioms,
)
from tsdelay.solver import DelayProblem, residual, solve, variation_of_parameters
from tsdelay.stability import (
    EXP_STABLE_21,
    EXP_STABLE_21A,
    UNSTABLE_31,
    LabGrid,
    SearchGrids,
    bound_thm21a,
    certify,
    check_condition_2_8,
    check_condition_11,
    check_instability,
    check_literature_conditions,
    initial_functional,
    instability_functional,
)
from tsdelay.timescale import GridFunction, QLattice, RealInterval, UnitLattice

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def real_problem(a, b, h, T=20.0):
    return DelayProblem(DelayFunction(real_system(0.0), h), lambda t: a, lambda t: b, lambda t: 1.0, T)


# -- A1 -------------------------------------------------------------------------

A1_SYSTEMS = [
    ("R", real_system(0.0), 1.0),
    ("R rebased", real_system(0.0).rebase(0.5), 2.0),
    ("2^Z", q_system(2.0, 1.0), 4.0),
    ("2^Z rebased", q_system(2.0, 1.0).rebase(2.0), 8.0),
    ("sqrtN", sqrt_system(0.0), None),
    ("sqrtN rebased", sqrt_system(0.0).rebase(2.0), math.sqrt(5)),
    ("0.5Z", step_system(0.5, 0.0), 1.0),
    ("0.5Z rebased", step_system(0.5, 0.0).rebase(1.5), 3.0),
]


def test_A1_shift_axiom_suite():
    start = time.perf_counter()
    for name, sys_, h in A1_SYSTEMS:
        report = verify_axioms(sys_, Sampling(n=1000, seed=0), h=h)
        assert report.pairs >= 1000, name
        assert report.passed, f"{name}\n{report.to_text()}"
        expected = {f"P.{i}" for i in range(1, 6)}
        expected |= {f"Lemma3.{r}" for r in ("i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x")}
        if h is not None:
            expected |= {"Corollary2", "structure"}
        assert expected <= set(report.results), name
    assert time.perf_counter() - start < 5.0


# -- A2 -------------------------------------------------------------------------


def test_A2_counterexamples_detected():
    gap = verify_axioms(gap_counterexample_system(), h=1.0)
    assert not gap.passed
    assert "FAIL (" in gap.to_text()
    broken = verify_axioms(broken_q_system())
    assert broken["closure"].counterexample is not None
    assert "closure FAIL (" in broken.to_text()


# -- A3 -------------------------------------------------------------------------

A3_SCALES = [("Z", UnitLattice(), 0.0, 30.0), ("2^Z", QLattice(2.0), 1.0, 2.0**10), ("R", RealInterval(), 0.0, 6.0)]


def _rel(x, y):
    return abs(x - y) / max(1.0, abs(y))


@pytest.mark.parametrize("name, ts, lo, hi", A3_SCALES, ids=[s[0] for s in A3_SCALES])
def test_A3_exponential_suite(name, ts, lo, hi):
    rng = np.random.default_rng(3)
    scale_p = (lambda x: 1 / x) if name == "2^Z" else (lambda x: 1.0)
    for _ in range(60):
        c0, c1 = rng.uniform(-0.5, 1.5), rng.uniform(-0.3, 0.3)
        p = lambda x, c0=c0, c1=c1: (c0 + c1 * math.sin(x)) * scale_p(x)  # noqa: E731
        t, s, r = (ts.sample_point(u, lo, hi) for u in rng.uniform(0, 1, 3))
        ep = lambda a, b: ts_exponential(p, a, b, ts)  # noqa: E731
        om = lambda x: circle_minus(p, x, ts)  # noqa: E731
        # group laws, sigma step and the derivative of 1/e_p
        assert ts_exponential(lambda x: 0.0, t, s, ts) == 1 and ep(t, t) == 1
        assert _rel(ep(ts.sigma(t), s), (1 + ts.mu(t) * p(t)) * ep(t, s)) <= 1e-9
        assert _rel(1 / ep(t, s), ts_exponential(om, t, s, ts)) <= 1e-9
        assert _rel(ep(t, s), 1 / ep(s, t)) <= 1e-9
        assert _rel(ep(t, s), ts_exponential(om, s, t, ts)) <= 1e-9
        assert _rel(ep(t, s) * ep(s, r), ep(t, r)) <= 1e-9
        assert _rel(ts.delta_derivative(lambda x: 1 / ep(x, s), t), -p(t) / ep(ts.sigma(t), s)) <= 1e-9
        # solves y^D = p y
        y = ts.delta_derivative(lambda x: ep(x, s), t)
        assert abs(y - p(t) * ep(t, s)) / max(1.0, abs(ep(t, s))) < 1e-7
        # positivity and the two-sided bound, t >= s
        lo_t, hi_t = min(t, s), max(t, s)
        pos = lambda x, c0=c0, c1=c1: (abs(c0) + abs(c1) * (1 + math.sin(x))) * scale_p(x)  # noqa: E731
        e = ts_exponential(pos, hi_t, lo_t, ts)
        integral = ts.delta_integral(pos, lo_t, hi_t)
        assert e > 0
        assert e <= math.exp(integral) * (1 + 1e-9)
        assert 1 + integral <= e * (1 + 1e-9)


# -- A4 -------------------------------------------------------------------------


def test_A4_example_one():
    start = time.perf_counter()
    p = real_problem(1.0, -1.5, 1 / 3)
    cert = certify(p, SearchGrids(lambdas=[1 / 3]))
    assert cert.verdict == EXP_STABLE_21
    assert cert.params["lambda"] == 1 / 3
    assert cert.params["alpha"] == pytest.approx(1 / 6, abs=1e-15)
    r11 = check_condition_11(p, 1 / 3, lab=cert.lab)
    assert r11.details["endpoints"] == (-0.75, -0.25)
    assert initial_functional(p, 1 / 3) == pytest.approx(7 / 24, abs=1e-12)
    r28 = check_condition_2_8(p, 1 / 6, 1 / 3, lab=cert.lab)
    assert r28.details["xi_min"] == pytest.approx(7 / 6, abs=1e-12)
    assert r28.details["xi_max"] == pytest.approx(7 / 6, abs=1e-12)
    tg, bound = cert.grid_t, cert.grid_bound
    x = np.array([cert.trajectory(t) for t in tg])
    window = tg >= 1 / 6 - 1e-12
    assert np.all(np.abs(x[window]) <= bound[window])
    assert bound[-1] == pytest.approx(1.42e-2, rel=0.05)
    lit = {r.name: r for r in check_literature_conditions(p, N=1.0)}
    assert not lit["sta"].holds
    assert time.perf_counter() - start < 10.0


# -- A5 -------------------------------------------------------------------------


def test_A5_example_two():
    p = real_problem(0.0, -0.9, 2 / 3)
    lit = {r.name: r for r in check_literature_conditions(p, lam=1.5, alpha=1 / 3)}
    assert lit["sta5"].holds
    left, middle, _ = lit["sta5"].details["left_endpoint"]
    assert left == pytest.approx(-0.9, abs=1e-12) and middle == pytest.approx(-0.9, abs=1e-12)
    assert not lit["sta8"].holds
    assert round(lit["sta8"].first_failure, 2) == 1.22
    cert = certify(p, SearchGrids(lambdas=[1.5], alphas=[1 / 3]))
    assert cert.verdict == EXP_STABLE_21
    tg, bound = cert.grid_t, cert.grid_bound
    x = np.array([cert.trajectory(t) for t in tg])
    window = tg >= 1 / 3 - 1e-12
    assert np.all(np.abs(x[window]) <= bound[window])


# -- A6 -------------------------------------------------------------------------


def _integer_oracle(n):
    x = {-1: 1.0, 0: 1.0}
    for t in range(n):
        x[t + 1] = x[t] - x[t - 1] / 4
    return x


def test_A6_isolated_gap():
    p = DelayProblem(DelayFunction(integer_system(0), 1), lambda t: 0.0, lambda t: -0.25, lambda t: 1.0, 100)
    assert isolated_gap(p.delay)
    V0 = initial_functional(p, 1.0)
    oracle = _integer_oracle(100)
    for t in range(101):
        # double root 1/2
        assert oracle[t] == pytest.approx((1 + t / 2) * 2.0**-t, rel=1e-12)
        closed = math.sqrt(2 * V0) * math.exp(-t / 8)
        assert bound_thm21a(p, 1.0, V0, t) == pytest.approx(closed, rel=1e-12)
        assert abs(oracle[t]) <= closed
    assert abs(oracle[40]) < 1e-6
    cert = certify(p, SearchGrids(lambdas=[1.0]))
    assert cert.verdict == EXP_STABLE_21A
    tr = solve(p)
    assert all(tr(t) == oracle[t] for t in range(101))


# -- A7 -------------------------------------------------------------------------


def _q_oracle(a, b, T):
    x = {0.5: 1.0, 1.0: 1.0}
    t = 1.0
    while t < T:
        x[2 * t] = x[t] + t * (a(t) * x[t] + b(t) * x[t / 2] * 0.5)
        t *= 2
    return x


def test_A7_q_lattice():
    q, T = 2.0, 2.0**20
    a = lambda t: -0.25 / t  # noqa: E731
    found = None
    for c in (0.4, 0.2, 0.1, 0.05):
        b = lambda t, c=c: -c / t  # noqa: E731
        p = DelayProblem(DelayFunction(q_system(q, 1.0), q), a, b, lambda t: 1.0, T)
        cert = certify(p)
        if cert.verdict == EXP_STABLE_21A:
            found = (c, p, cert)
            break
    assert found is not None
    c, p, cert = found
    lab, lam = cert.lab, cert.params["lambda"]
    idx = list(lab.forward())
    t = lab.t[idx]
    varpi = t * (1 - 1 / q)
    assert np.array_equal(lab.beta[idx], varpi)
    assert np.array_equal(lab.mu[idx], t * (q - 1))
    lower, _ = check_condition_11(p, lam, lab=lab).details["endpoints"]
    assert lower == pytest.approx(-lam / q / (varpi[0] + lam * (varpi[0] + t[0] * (q - 1))), rel=1e-15)
    oracle = _q_oracle(a, p.b, T)
    for tk, bk in zip(cert.grid_t, cert.grid_bound):
        assert abs(oracle[float(tk)]) <= bk


# -- A8 -------------------------------------------------------------------------


def _reference_instability(T):
    a, b, h = -0.25, 0.5, 0.5
    pieces = []

    def past(t):
        if t <= 0:
            return 1.0
        for lo, hi, sol in pieces:
            if lo <= t <= hi:
                return float(sol(t)[0])
        raise AssertionError(t)

    y0, t = 1.0, 0.0
    while t < T - 1e-12:
        hi = min(t + h, T)
        sol = solve_ivp(lambda s, y: [a * y[0] + b * past(s - h)], (t, hi), [y0], method="DOP853",
                        rtol=1e-12, atol=1e-12, dense_output=True).sol
        pieces.append((t, hi, sol))
        y0, t = float(sol(hi)[0]), hi
    return past


def test_A8_instability():
    p = real_problem(-0.25, 0.5, 0.5, T=40.0)
    rep = check_instability(p, 1.0)
    assert rep.holds
    assert rep.margins["beta_below_D"] == 0.5 and rep.margins["D_below_ratio"] >= 0
    assert rep.V0 == pytest.approx(1.4375, abs=1e-12)
    ref = _reference_instability(30.0)
    for t in np.linspace(0.0, 30.0, 121):
        assert abs(ref(t)) >= rep.lower_bound(t) - 1e-6
    assert ref(30.0) > 10
    cert = certify(p)
    assert cert.verdict == UNSTABLE_31
    tr = solve(p)
    lab = LabGrid(p)
    V = instability_functional(p, tr.x[: lab.m], 1.0, lab)
    idx = list(lab.forward())
    gf = GridFunction(lab.t[idx], V, p.scale, lab.knots)
    dV = gf.delta_derivatives()[:-1]
    assert np.all(dV >= lab.Q[idx][:-1] * V[:-1] - 1e-7)


# -- A9 -------------------------------------------------------------------------


def _lattice_delay(rng, kind):
    if kind == "Z":
        h = int(rng.integers(1, 5))
        return DelayFunction(integer_system(0), h), float(rng.integers(h, 30))
    k = int(rng.integers(1, 4))
    return DelayFunction(q_system(2.0, 1.0), 2.0**k), 2.0 ** int(rng.integers(k, 12))


@pytest.mark.parametrize("kind", ["Z", "2^Z"])
def test_A9_identities_on_lattices(kind):
    rng = np.random.default_rng(9)
    for _ in range(100):
        c = [float(v) for v in rng.integers(-5, 6, 3)]
        df, t = _lattice_delay(rng, kind)
        f = lambda s, c=c: c[0] + c[1] * s + c[2] * s * s  # noqa: E731
        g = lambda r, s, c=c: c[0] * r + c[1] * s + c[2] * s * s  # noqa: E731
        assert delayed_integral_direct(df, f, t) == delayed_integral_split(df, f, t)
        assert leibniz_delay_derivative(df, g, lambda r, s, c=c: c[0], t) == leibniz_direct(df, g, t)
        lhs, rhs = interchange_double(df, f, t)
        assert lhs == rhs


def test_A9_identities_on_reals():
    rng = np.random.default_rng(10)
    for _ in range(100):
        c = rng.uniform(-2, 2, 3)
        h = float(rng.uniform(0.2, 2.0))
        df, t = DelayFunction(real_system(0.0), h), float(rng.uniform(h, 5.0))
        f = lambda s, c=c: c[0] + c[1] * math.sin(s) + c[2] * s * s  # noqa: E731
        g = lambda r, s, c=c: c[0] * r + c[1] * math.sin(s) + c[2] * s * s  # noqa: E731
        assert abs(delayed_integral_direct(df, f, t) - delayed_integral_split(df, f, t)) <= 1e-9
        assert abs(leibniz_delay_derivative(df, g, lambda r, s, c=c: c[0], t) - leibniz_direct(df, g, t)) <= 1e-9
        lhs, rhs = interchange_double(df, f, t)
        assert abs(lhs - rhs) <= 1e-9


# -- A10 ------------------------------------------------------------------------


def test_A10_solver_oracles():
    p = DelayProblem(DelayFunction(integer_system(0), 3), lambda t: -0.1 * math.cos(t), lambda t: 0.3,
                     lambda t: 1.0 + t, 60)
    tr = solve(p)
    x = {t: 1.0 + t for t in range(-3, 1)}
    for t in range(60):
        x[t + 1] = x[t] + 1.0 * (p.a(t) * x[t] + p.b(t) * x[t - 3] * 1.0)
    assert all(tr(t) == x[t] for t in range(-3, 61))
    p = _q = DelayProblem(DelayFunction(q_system(2.0, 1.0), 2.0), lambda t: -0.25 / t, lambda t: -0.1 / t,
                          lambda t: 1.0, 2.0**12)
    tr = solve(_q)
    oracle = _q_oracle(p.a, p.b, p.T)
    assert all(tr(t) == v for t, v in oracle.items())

    ex1 = real_problem(1.0, -1.5, 1 / 3)
    r1 = residual(ex1, solve(ex1, 0.02))
    r2 = residual(ex1, solve(ex1, 0.01))
    assert r1 / r2 >= 4
    tr = solve(ex1)
    for t in np.linspace(0.0, 1 / 3, 9)[:-1]:
        assert variation_of_parameters(ex1, t) == pytest.approx(tr(t), abs=1e-7)


# -- A11 ------------------------------------------------------------------------


@settings(max_examples=1000, deadline=None)
@given(exprs)
def test_A11_round_trip(e):
    assert parse(format_expr(e)) == e


@pytest.mark.parametrize("text, offset", [("t^", 2), ("2t", 1), ("2^t", 2)])
def test_A11_error_offsets(text, offset):
    with pytest.raises(ExprSyntaxError) as err:
        parse(text)
    assert err.value.offset == offset


def test_A11_cli_determinism(tmp_path):
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        cmd = [sys.executable, "-m", "tsdelay", "certify", "--config", str(CONFIGS / "example1.cfg"), "--out", str(out)]
        res = subprocess.run(cmd, capture_output=True, check=False)
        assert res.returncode == 0
        outputs.append((res.stdout, *(f.read_bytes() for f in sorted(out.iterdir()))))
    assert outputs[0] == outputs[1]
