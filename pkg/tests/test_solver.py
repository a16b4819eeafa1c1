import math

import numpy as np
import pytest

from tsdelay.errors import HistoryGap, OutOfHistoryRegime
from tsdelay.shifts import DelayFunction, integer_system, q_system, real_scaling_system, real_system
from tsdelay.solver import DelayProblem, TableHistory, residual, solve, variation_of_parameters


def _integer_problem(T=10):
    df = DelayFunction(integer_system(0), 1)
    return DelayProblem(df, lambda t: 0.0, lambda t: -0.5, lambda t: 1.0, T)


def _example1(T=20.0):
    df = DelayFunction(real_system(0.0), 1 / 3)
    return DelayProblem(df, lambda t: 1.0, lambda t: -1.5, lambda t: 1.0, T)


def test_integer_recurrence_values():
    tr = solve(_integer_problem())
    assert tr(1) == 0.5 and tr(2) == 0.0 and tr(3) == -0.25
    assert residual(_integer_problem(), tr) == 0.0


def test_constant_solution():
    for df in (DelayFunction(integer_system(0), 2), DelayFunction(real_system(0.0), 0.5)):
        tr = solve(DelayProblem(df, lambda t: 0.0, lambda t: 0.0, lambda t: 2.5, 5))
        assert np.all(tr.x == 2.5)


def test_example1_decays():
    p = _example1()
    tr = solve(p)
    assert abs(tr(20.0)) <= 1.5e-2
    assert residual(p, tr) <= 1e-8


def test_corrupted_trajectory_detected():
    p = _integer_problem()
    tr = solve(p)
    tr.x[5] += 1.0
    assert residual(p, tr) > 0.1


def test_lattice_determinism():
    a, b = solve(_integer_problem(30)), solve(_integer_problem(30))
    assert a.to_csv() == b.to_csv()


def test_q_lattice_recurrence():
    df = DelayFunction(q_system(2.0, 1.0), 2.0)
    p = DelayProblem(df, lambda t: -0.25 / t, lambda t: -0.1 / t, lambda t: 1.0, 64.0)
    tr = solve(p)
    x = {0.5: 1.0, 1.0: 1.0}
    t = 1.0
    while t < 64.0:
        x[2 * t] = x[t] + t * (-0.25 / t * x[t] + -0.1 / t * x[t / 2] * 0.5)
        t *= 2
    for t, v in x.items():
        assert tr(t) == v


def test_nonconstant_lag_real_line():
    # delta_-(h, t) = t / h for t >= 0; the segments are [1, 2], [2, 4], ...
    df = DelayFunction(real_scaling_system(), 2.0)
    p = DelayProblem(df, lambda t: -1.0, lambda t: 0.5, lambda t: 1.0, 16.0)
    tr = solve(p)
    assert residual(p, tr) < 1e-7
    assert tr.t[0] == 0.5


def test_variation_of_parameters_examples():
    p = _example1()
    assert variation_of_parameters(p, 0.0) == 1.0
    tr = solve(p)
    assert variation_of_parameters(p, 1 / 3) == pytest.approx(tr(1 / 3), abs=1e-7)
    assert variation_of_parameters(_integer_problem(), 1) == 0.5
    with pytest.raises(OutOfHistoryRegime):
        variation_of_parameters(p, 0.5)


def test_history_table():
    df = DelayFunction(real_system(0.0), 1.0)
    table = TableHistory([(-1.0, 0.0), (-0.5, 0.25), (0.0, 1.0)])
    tr = solve(DelayProblem(df, lambda t: 0.0, lambda t: 0.0, table, 2.0))
    assert tr(-0.5) == 0.25
    with pytest.raises(HistoryGap):
        DelayProblem(df, lambda t: 0.0, lambda t: 0.0, TableHistory([(-0.5, 0.0), (0.0, 1.0)]), 2.0)


def test_csv_format():
    csv = solve(_integer_problem(3)).to_csv().splitlines()
    assert csv[0] == "t,x,mu,delayed_t,delay_deriv"
    assert csv[1] == "-1.0,1.0,1.0,,"
    assert csv[2] == "0.0,1.0,1.0,-1.0,1.0"
