import math

import numpy as np
import pytest

from tsdelay.calculus import grid_exponential
from tsdelay.errors import Condition228aFails, EmptyAlphaInterval, NonPositiveV0, PreconditionNotVerified, ZeroBAt
from tsdelay.shifts import DelayFunction, integer_system, q_system, real_system
from tsdelay.solver import DelayProblem, solve
from tsdelay.stability import (
    BOUNDED_23,
    EXP_STABLE_21,
    EXP_STABLE_21A,
    NOT_CERTIFIED,
    UNSTABLE_31,
    LabGrid,
    SearchGrids,
    bound_thm21,
    bound_thm21a,
    certify,
    check_condition_2_8,
    check_condition_11,
    check_instability,
    check_literature_conditions,
    eta_and_bound_thm23,
    eta_at,
    functionals,
    initial_functional,
)
from tsdelay.timescale import GridFunction


def real_problem(a, b, h, T=20.0, psi=1.0):
    return DelayProblem(DelayFunction(real_system(0.0), h), lambda t: a, lambda t: b, lambda t: psi, T)


def int_problem(a, b, h, T=40):
    return DelayProblem(DelayFunction(integer_system(0), h), lambda t: a, lambda t: b, lambda t: 1.0, T)


EX1 = dict(a=1.0, b=-1.5, h=1 / 3)


def test_functionals_example1_initial_values():
    p = real_problem(**EX1)
    tr = solve(p)
    fc = functionals(p, tr, 1 / 3)
    assert fc.A[0] == pytest.approx(0.5, abs=1e-12)
    assert fc.V[0] == pytest.approx(7 / 24, abs=1e-12)
    assert initial_functional(p, 1 / 3) == pytest.approx(7 / 24, abs=1e-12)


def test_functionals_double_integral_two_ways():
    p = real_problem(**EX1)
    fc = functionals(p, solve(p), 1 / 3)
    assert np.max(np.abs(fc.H - fc.H_8a)) <= 1e-9


def test_functionals_zero_b():
    p = real_problem(-1.0, 0.0, 0.5, T=3.0)
    tr = solve(p)
    fc = functionals(p, tr, 2.0)
    assert np.array_equal(fc.V, fc.x**2)


def test_functionals_integer_brute_force():
    p = DelayProblem(DelayFunction(integer_system(0), 2), lambda t: -0.2, lambda t: 0.1 * math.cos(t),
                     lambda t: 1.0 + t, 12)
    tr = solve(p)
    fc = functionals(p, tr, 0.7)
    x = {int(t): v for t, v in zip(tr.t, tr.x)}
    bp = lambda s: p.b(s + 2)  # noqa: E731
    for j, t in enumerate(range(0, 13)):
        A = x[t] + sum(bp(s) * x[s] for s in range(t - 2, t))
        H = sum(sum(bp(u) ** 2 * x[u] ** 2 for u in range(s, t)) for s in range(t - 2, t))
        assert fc.A[j] == pytest.approx(A, rel=1e-13, abs=1e-15)
        assert fc.H[j] == pytest.approx(H, rel=1e-13, abs=1e-15)
        assert fc.H_8a[j] == pytest.approx(H, rel=1e-13, abs=1e-15)


def test_condition_11_examples():
    r = check_condition_11(real_problem(**EX1), 1 / 3)
    assert r.holds
    assert r.details["endpoints"] == (-0.75, -0.25)
    assert r.details["Q"] == -0.5
    r = check_condition_11(int_problem(0.0, -0.25, 1), 1.0)
    assert r.holds
    assert r.details["endpoints"] == pytest.approx((-1 / 3, -3 / 16), abs=1e-15)
    assert not check_condition_11(real_problem(1.0, 0.0, 0.5), 1.0).holds


def test_condition_11_strict_variant_differs_on_lattices():
    # on Z with beta = mu = 1 the two lower denominators are 1 + 2 lam and 2 + lam
    p = int_problem(0.0, -0.25, 1)
    strict = check_condition_11(p, 1.0, strict=True)
    assert strict.details["endpoints"][0] == pytest.approx(-1 / 3)
    strict = check_condition_11(p, 0.5, strict=True)
    assert strict.details["endpoints"][0] == pytest.approx(-0.5 / 2.5)


def test_condition_2_8_examples():
    r = check_condition_2_8(real_problem(**EX1), 1 / 6, 1 / 3)
    assert r.holds
    assert r.details["xi_min"] == pytest.approx(7 / 6, abs=1e-12)
    assert r.details["xi_max"] == pytest.approx(7 / 6, abs=1e-12)
    assert check_condition_2_8(real_problem(0.0, -0.9, 2 / 3), 1 / 3, 1.5).holds
    assert not check_condition_2_8(real_problem(**EX1), 0.25, 1 / 3).holds
    with pytest.raises(EmptyAlphaInterval):
        check_condition_2_8(int_problem(0.0, -0.25, 1), 0.5, 1.0)


def test_bound_thm21_examples():
    p = real_problem(**EX1)
    for t in (1.0, 7.5, 20.0):
        expected = math.sqrt(49 / 12) * math.exp(-(t - 1 / 6) / 4)
        assert bound_thm21(p, 1 / 3, 1 / 6, 7 / 24, t) == pytest.approx(expected, rel=1e-9)
    assert bound_thm21(p, 1 / 3, 1 / 6, 7 / 24, 20.0) == pytest.approx(1.42e-2, rel=0.05)
    # at t = alpha the exponent vanishes
    assert bound_thm21(p, 1 / 3, 1 / 6, 7 / 24, 1 / 6) == pytest.approx(math.sqrt(2 * (7 / 24) * 7), rel=1e-12)
    with pytest.raises(PreconditionNotVerified):
        bound_thm21(int_problem(0.0, -0.25, 1), 1.0, 1.0, 0.625, 3)


def test_bound_thm21_history_part():
    p = real_problem(**EX1)
    # a = 1, b = -3/2, M = 1: e^t (1 + 1.5 (1 - e^-t))
    t = 0.1
    assert bound_thm21(p, 1 / 3, 1 / 6, 7 / 24, t) == pytest.approx(math.exp(t) * (1 + 1.5 * (1 - math.exp(-t))), rel=1e-9)


def test_bound_thm21a_examples():
    p = int_problem(0.0, -0.25, 1)
    V0 = initial_functional(p, 1.0)
    assert V0 == 0.625
    assert bound_thm21a(p, 1.0, V0, 0) == math.sqrt(2 * V0)
    for t in (1, 5, 17):
        assert bound_thm21a(p, 1.0, V0, t) == pytest.approx(math.sqrt(2 * V0) * math.exp(-t / 8), rel=1e-13)
    qp = DelayProblem(DelayFunction(q_system(2.0, 1.0), 2.0), lambda t: -0.25 / t, lambda t: -0.1 / t,
                      lambda t: 1.0, 64.0)
    total = sum(t * (-0.25 / t - 0.1 / (2 * t)) for t in (1.0, 2.0, 4.0))
    assert bound_thm21a(qp, 4.0, 1.0, 8.0) == pytest.approx(math.sqrt(1.25) * math.exp(total / 2), rel=1e-13)
    with pytest.raises(PreconditionNotVerified):
        bound_thm21a(real_problem(**EX1), 1.0, 1.0, 2.0)


def test_eta_constant_case():
    p = real_problem(0.0, 0.25, 1.0, T=5.0)
    assert eta_at(p, 1.0, 3.0) == pytest.approx(0.5, abs=1e-10)
    eta, gamma, _ = eta_and_bound_thm23(p, 1.0, 3.0)
    assert eta == pytest.approx(0.5, abs=1e-10)
    assert gamma == pytest.approx(0.5, abs=1e-10)
    with pytest.raises(Condition228aFails):
        eta_and_bound_thm23(real_problem(0.0, 0.75, 1.0, T=5.0), 1.0, 3.0)


def test_eta_lattice_initial_functional():
    p = DelayProblem(DelayFunction(integer_system(0), 3), lambda t: 0.0, lambda t: 0.1, lambda t: -2.0, 10)
    eta, _, bound = eta_and_bound_thm23(p, 1.0, 0)
    assert eta == pytest.approx(1 / 4)
    assert bound == pytest.approx(2.0 * (1 + 1.0 * eta * 3))


def test_instability_example():
    p = real_problem(-0.25, 0.5, 0.5, T=40.0)
    r = check_instability(p, 1.0)
    assert r.holds
    assert r.V0 == pytest.approx(1.4375, abs=1e-12)
    assert r.margins["beta_below_D"] == 0.5
    assert r.margins["D_below_ratio"] == 0.0
    with pytest.raises(ZeroBAt):
        check_instability(real_problem(1.0, 0.0, 0.5), 1.0)
    with pytest.raises(NonPositiveV0):
        check_instability(real_problem(-0.25, 0.5, 0.5, psi=0.0), 1.0)


def test_certify_examples():
    c = certify(real_problem(**EX1), SearchGrids(lambdas=[1 / 3]))
    assert c.verdict == EXP_STABLE_21
    assert c.params["lambda"] == 1 / 3 and c.params["alpha"] == pytest.approx(1 / 6)
    c = certify(int_problem(0.0, -0.25, 1, T=40))
    assert c.verdict == EXP_STABLE_21A and c.params["lambda"] == 1.0
    assert certify(real_problem(1.0, 0.0, 0.5, T=5.0)).verdict == NOT_CERTIFIED
    assert certify(real_problem(-0.25, 0.5, 0.5, T=40.0)).verdict == UNSTABLE_31


def test_certify_bounded_verdict():
    # e_a decays, so eta does too; b has to decay with it
    p = DelayProblem(DelayFunction(real_system(0.0), 1.0), lambda t: -1.0, lambda t: 0.1 * math.exp(-t),
                     lambda t: 1.0, 8.0)
    c = certify(p, SearchGrids(lambdas=[1.0], Ds=[]))
    assert c.verdict == BOUNDED_23
    tr = c.trajectory
    idx = list(c.lab.forward())
    assert np.all(c.grid_bound >= np.abs(tr.x[idx]) - 1e-7)


def test_certificate_serialisation():
    c = certify(real_problem(**EX1, T=5.0), SearchGrids(lambdas=[1 / 3], alphas=[1 / 6]))
    text = c.to_text()
    assert text.startswith("verdict: ExpStable_Thm21\n")
    assert "param lambda = 0.3333333333333333" in text
    csv = c.to_csv().splitlines()
    assert csv[0] == "t,x,V,bound,Q,beta"
    assert csv[1].startswith("0.0,1.0,")


def test_literature_examples():
    reports = {r.name: r for r in check_literature_conditions(real_problem(**EX1), N=1.0)}
    assert not reports["sta"].holds
    reports = {r.name: r for r in check_literature_conditions(real_problem(0.0, -0.9, 2 / 3), lam=1.5)}
    assert reports["sta8"].first_failure == pytest.approx(-(10 / 9) * math.log(1 / 3), rel=1e-12)
    assert reports["sta7"].first_failure == pytest.approx(1.22, abs=0.02)
    assert reports["sta5"].holds
    reports = {r.name: r for r in check_literature_conditions(real_problem(-2.0, 0.5, 1.0), N=1.0)}
    assert reports["sta"].holds


def test_sta7_numeric_matches_closed_form():
    p = real_problem(0.0, -0.4, 1.0, T=6.0)
    lab = LabGrid(p)
    from tsdelay.stability import _sta7_values

    S = _sta7_values(p, lab)
    t = lab.t[lab.i0 : lab.m]
    assert np.max(np.abs(S - 0.4 * (2 - np.exp(-0.4 * t)))) < 1e-9


def _lyapunov_data(p, lam):
    tr = solve(p)
    lab = LabGrid(p)
    fc = functionals(p, tr, lam, lab)
    fwd = GridFunction(fc.t, fc.V, p.scale, lab.knots)
    return tr, lab, fc, fwd


def test_lyapunov_decrease_example1():
    p = real_problem(**EX1)
    tr, lab, fc, fwd = _lyapunov_data(p, 1 / 3)
    dV = fwd.delta_derivatives()[:-1]
    assert np.all(dV <= fc.Q[:-1] * fc.V[:-1] + 1e-7)
    eQ = grid_exponential(fwd, fc.Q)
    assert np.all(fc.V <= fc.V[0] * eQ + 1e-6)


def test_lyapunov_decrease_integer():
    p = int_problem(0.0, -0.25, 1, T=30)
    tr, lab, fc, fwd = _lyapunov_data(p, 1.0)
    dV = fwd.delta_derivatives()[:-1]
    assert np.all(dV <= fc.Q[:-1] * fc.V[:-1] + 1e-12)


def test_rewritten_equation():
    # A^D = Q x along solutions
    for p in (real_problem(**EX1, T=5.0), int_problem(0.3, -0.2, 2, T=20)):
        tr, lab, fc, _ = _lyapunov_data(p, 1.0)
        A = GridFunction(fc.t, fc.A, p.scale, lab.knots)
        dA = A.delta_derivatives()[:-1]
        assert np.max(np.abs(dA - fc.Q[:-1] * fc.x[:-1])) < 1e-7


def test_q_lattice_specialisation():
    q, k = 2.0, 1
    p = DelayProblem(DelayFunction(q_system(q, 1.0), q**k), lambda t: -0.25 / t, lambda t: -0.1 / t,
                     lambda t: 1.0, 2.0**10)
    lab = LabGrid(p)
    idx = list(lab.forward())
    t = lab.t[idx]
    varpi = t * (1 - q**-k)
    assert np.array_equal(lab.beta[idx], varpi)
    assert np.array_equal(lab.mu[idx], t * (q - 1))
    lam = 4.0
    r = check_condition_11(p, lam, lab=lab)
    assert r.details["endpoints"][0] == pytest.approx(-lam * q**-k / (varpi[0] + lam * (varpi[0] + t[0] * (q - 1))))
