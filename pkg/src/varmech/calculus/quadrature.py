"""Adaptive composite 5-point Gauss-Legendre quadrature.

Panels are refined breadth first: every pending panel is compared with the
sum over its two halves, and all integrand evaluations of one refinement
round go through a single vectorized call.  A panel is accepted once the
two estimates agree to its share of the tolerance (proportional to its
length); otherwise it is bisected.  Optional breakpoints split the interval
up front, which is how piecewise-smooth integrands (grid curves) are
handled without refining towards every kink.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..errors import QuadratureError

__all__ = ["integrate_time", "gauss_legendre_panel", "GL_NODES", "GL_WEIGHTS"]

GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(5)
DEFAULT_TOL = 1e-10
MAX_DEPTH = 40
MAX_PENDING = 1 << 16
_EPS = np.finfo(float).eps


def _call(h, ts, vectorized):
    if vectorized:
        out = np.asarray(h(ts), dtype=float)
        return np.broadcast_to(out, ts.shape)
    return np.array([float(h(float(t))) for t in ts.ravel()]).reshape(ts.shape)


def _panels(h, a, b, vectorized):
    """GL5 estimates on panels [a_i, b_i]; a and b are 1-D arrays."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    ts = mid[:, None] + half[:, None] * GL_NODES[None, :]
    vals = _call(h, ts, vectorized)
    return half * (vals @ GL_WEIGHTS)


def gauss_legendre_panel(h: Callable, a: float, b: float, vectorized: bool = True) -> float:
    """Single 5-point Gauss-Legendre panel; exact for polynomials of degree <= 9."""
    return float(_panels(h, np.array([a], float), np.array([b], float), vectorized)[0])


def integrate_time(
    h: Callable,
    t0: float,
    t1: float,
    tol: float = DEFAULT_TOL,
    *,
    breakpoints=None,
    vectorized: bool = True,
    max_depth: int = MAX_DEPTH,
) -> float:
    """Integral of ``h`` over ``[t0, t1]`` to absolute tolerance ``tol``.

    Args:
        h: integrand.  With ``vectorized=True`` (default) it is called with
            an ndarray of times and must return an array of the same shape;
            otherwise it is called once per node with a float.
        t0, t1: limits, ``t0 <= t1``.
        tol: absolute tolerance on the total.
        breakpoints: interior times where ``h`` may be non-smooth.
        max_depth: bisection limit per initial panel.

    Raises:
        QuadratureError: when some panel has not converged at ``max_depth``.
    """
    t0 = float(t0)
    t1 = float(t1)
    if not t0 <= t1:
        raise ValueError(f"integration limits must satisfy t0 <= t1, got [{t0}, {t1}]")
    if t0 == t1:
        return 0.0
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    edges = [t0, t1]
    if breakpoints is not None:
        bp = np.asarray(breakpoints, dtype=float).ravel()
        edges = np.unique(np.concatenate([[t0, t1], bp[(bp > t0) & (bp < t1)]]))
    a = np.asarray(edges[:-1], dtype=float)
    b = np.asarray(edges[1:], dtype=float)
    keep = b > a
    a, b = a[keep], b[keep]
    length = t1 - t0

    whole = _panels(h, a, b, vectorized)
    total = 0.0
    err_total = 0.0
    for _ in range(max_depth + 1):
        m = 0.5 * (a + b)
        both = _panels(h, np.concatenate([a, m]), np.concatenate([m, b]), vectorized)
        left, right = both[: a.size], both[a.size :]
        fine = left + right
        err = np.abs(fine - whole)
        local = tol * (b - a) / length
        # roundoff floor: agreement to a few ulps of the panel value is as good as it gets
        floor = 64.0 * _EPS * (np.abs(left) + np.abs(right))
        done = (err <= local) | (err <= floor)
        if not np.all(np.isfinite(fine)):
            raise QuadratureError("integrand is not finite on the interval")
        total += float(np.sum(fine[done]))
        err_total += float(np.sum(err[done]))
        if np.all(done):
            return total
        todo = ~done
        if 2 * np.count_nonzero(todo) > MAX_PENDING:
            # usually a tolerance below the integrand's own rounding noise
            raise QuadratureError(
                f"tolerance {tol:g} not reached: more than {MAX_PENDING} panels pending",
                estimate=total + float(np.sum(fine[todo])),
                error=err_total + float(np.sum(err[todo])),
            )
        a, m, b = a[todo], m[todo], b[todo]
        whole = np.concatenate([left[todo], right[todo]])
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
    raise QuadratureError(
        f"tolerance {tol:g} not reached after {max_depth} bisections "
        f"({a.size} panels pending)",
        estimate=total + float(np.sum(whole)),
        error=err_total + float(np.sum(err[todo])),
    )
