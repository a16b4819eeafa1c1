"""Low-level quadrature and finite-difference helpers for dense segments."""

from __future__ import annotations

from collections.abc import Callable
from functools import lru_cache

import numpy as np

DEFAULT_QUAD_TOL = 1e-10


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = DEFAULT_QUAD_TOL,
    max_depth: int = 40,
) -> float:
    """Integrate ``f`` over ``[a, b]`` by adaptive Simpson with Richardson correction.

    The tolerance is absolute and is halved at each bisection. An explicit
    stack keeps the recursion depth bounded for long intervals.
    """
    if a == b:
        return 0.0
    if a > b:
        return -adaptive_simpson(f, b, a, tol, max_depth)

    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    total = 0.0
    # (a, b, fa, fm, fb, whole, tol, depth); evaluated left to right for determinism
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        a_, b_, fa_, fm_, fb_, whole_, tol_, depth = stack.pop()
        m_ = 0.5 * (a_ + b_)
        lm, rm = 0.5 * (a_ + m_), 0.5 * (m_ + b_)
        flm, frm = f(lm), f(rm)
        left = (m_ - a_) / 6.0 * (fa_ + 4.0 * flm + fm_)
        right = (b_ - m_) / 6.0 * (fm_ + 4.0 * frm + fb_)
        delta = left + right - whole_
        if depth >= max_depth or abs(delta) <= 15.0 * tol_:
            total += left + right + delta / 15.0
        else:
            stack.append((m_, b_, fm_, frm, fb_, right, 0.5 * tol_, depth + 1))
            stack.append((a_, m_, fa_, flm, fm_, left, 0.5 * tol_, depth + 1))
    return total


def _moment_weights(offsets: tuple[float, ...], moments: np.ndarray) -> np.ndarray:
    n = len(offsets)
    vander = np.vander(np.asarray(offsets, dtype=float), n, increasing=True).T
    return np.linalg.solve(vander, moments)


@lru_cache(maxsize=4096)
def derivative_weights(offsets: tuple[float, ...]) -> np.ndarray:
    """Weights w with sum(w_j f(x + offsets_j)) ~ f'(x); offsets in step units."""
    n = len(offsets)
    moments = np.zeros(n)
    moments[1] = 1.0
    return _moment_weights(offsets, moments)


@lru_cache(maxsize=4096)
def interval_weights(offsets: tuple[float, ...], lo: float, hi: float) -> np.ndarray:
    """Weights for the integral over [lo, hi] of the interpolant through offsets."""
    n = len(offsets)
    k = np.arange(1, n + 1, dtype=float)
    moments = (hi**k - lo**k) / k
    return _moment_weights(offsets, moments)


def _stencils(x: np.ndarray, m: int, starts: np.ndarray, origin: np.ndarray, unit: np.ndarray):
    """Stencil indices and their offsets in step units, rounded so uniform runs share weights."""
    idx = starts[:, None] + np.arange(m)[None, :]
    offs = np.round((x[idx] - origin[:, None]) / unit[:, None], 9)
    uniq, inverse = np.unique(offs, axis=0, return_inverse=True)
    return idx, uniq, inverse.reshape(-1)


def run_derivative(x: np.ndarray, y: np.ndarray, order: int = 7) -> np.ndarray:
    """Derivative of smooth samples ``y(x)`` at every node of one run.

    Uses an ``order``-point stencil clamped inside the run, so it never reaches
    across a breakpoint supplied by the caller.
    """
    n = len(x)
    if n < 2:
        raise ValueError("a run needs at least two nodes")
    m = min(order, n)
    i = np.arange(n)
    starts = np.clip(i - m // 2, 0, n - m)
    unit = (x[starts + m - 1] - x[starts]) / (m - 1)
    idx, uniq, inverse = _stencils(x, m, starts, x, unit)
    weights = np.array([derivative_weights(tuple(row)) for row in uniq])
    return np.einsum("ij,ij->i", weights[inverse], y[idx]) / unit


def run_cumulative(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Cumulative integral of smooth samples over one run (cubic, 4th order)."""
    n = len(x)
    out = np.zeros(n)
    if n < 2:
        return out
    m = min(4, n)
    i = np.arange(n - 1)
    starts = np.clip(i - 1, 0, n - m)
    unit = x[1:] - x[:-1]
    idx, uniq, inverse = _stencils(x, m, starts, x[:-1], unit)
    weights = np.array([interval_weights(tuple(row), 0.0, 1.0) for row in uniq])
    out[1:] = np.cumsum(unit * np.einsum("ij,ij->i", weights[inverse], y[idx]))
    return out


def central_derivative(f: Callable[[float], float], t: float, step: float, one_sided: bool) -> float:
    """Fourth-order difference quotient; forward-only when ``one_sided``."""
    if not one_sided:
        return (-f(t + 2 * step) + 8 * f(t + step) - 8 * f(t - step) + f(t - 2 * step)) / (12 * step)
    f0, f1, f2, f3, f4 = (f(t + k * step) for k in range(5))
    return (-25 * f0 + 48 * f1 - 36 * f2 + 16 * f3 - 3 * f4) / (12 * step)
