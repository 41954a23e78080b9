"""Virtual work in statics: the constitutive set of an internal energy.

A pair (q, f) of a configuration and an external force belongs to the
constitutive set when <f, dq> = DU(q, dq) for every virtual displacement dq,
i.e. when f = dU/dq(q).  Membership is decided with the infinity norm of
that residual.
"""

from __future__ import annotations

import numpy as np

from .affine import Covector, Point, Vector, coords_of as _raw, pair
from .errors import ConvergenceError, SingularMatrixError
from .models import StaticSystem

__all__ = [
    "StaticSystem",
    "ControlledState",
    "du",
    "constitutive_residual",
    "constitutive_member",
    "solve_equilibrium",
]


class ControlledState:
    """A configuration together with the external force holding it."""

    __slots__ = ("q", "f")

    def __init__(self, q, f):
        self.q = q if isinstance(q, Point) else Point(q)
        self.f = f if isinstance(f, Covector) else Covector(f)
        if self.q.dim != self.f.dim:
            raise ValueError("configuration and force dimensions differ")

    def __repr__(self):
        return f"ControlledState(q={self.q!r}, f={self.f!r})"


def du(sys: StaticSystem, q, dq) -> float:
    """DU(q, dq): derivative of the internal energy along dq."""
    grad = sys.force(_raw(q, Point, sys.dim))
    return pair(Covector(grad), Vector(_raw(dq, Vector, sys.dim)))


def constitutive_residual(sys: StaticSystem, q, f) -> float:
    """||dU/dq(q) - f||_inf; zero exactly on the constitutive set."""
    grad = sys.force(_raw(q, Point, sys.dim))
    return float(np.max(np.abs(grad - _raw(f, Covector, sys.dim))))


def constitutive_member(sys: StaticSystem, q, f, tol: float = 1e-9) -> bool:
    return constitutive_residual(sys, q, f) <= tol


def solve_equilibrium(
    sys: StaticSystem,
    f,
    q_init=None,
    tol: float = 1e-12,
    max_iter: int = 50,
    max_halvings: int = 40,
) -> Point:
    """Find q with dU/dq(q) = f by Newton iteration on the force residual.

    Every stationary point of U - <f, q> is a solution, not only minima.
    The Newton step is halved until the residual norm decreases.

    Raises:
        SingularMatrixError: the stiffness matrix is singular at an iterate.
        ConvergenceError: the residual is still above ``tol`` after
            ``max_iter`` steps or the line search stalls.  Both errors
            carry the final residual.
    """
    n = sys.dim
    f = _raw(f, Covector, n)
    q = np.zeros(n) if q_init is None else _raw(q_init, Point, n).copy()

    def residual(x):
        return sys.force(x) - f

    r = residual(q)
    res = float(np.max(np.abs(r)))
    for _ in range(max_iter):
        if res <= tol:
            return Point(q)
        k = sys.stiffness(q)
        try:
            if np.linalg.cond(k) > 1e14:
                raise np.linalg.LinAlgError("ill-conditioned")
            step = np.linalg.solve(k, -r)
        except np.linalg.LinAlgError:
            raise SingularMatrixError(
                f"singular stiffness at q={q.tolist()} (residual {res:.3e})", residual=res, iterate=q
            ) from None
        s = 1.0
        for _ in range(max_halvings + 1):
            trial = q + s * step
            r_trial = residual(trial)
            res_trial = float(np.max(np.abs(r_trial)))
            if res_trial < res:
                break
            s *= 0.5
        else:
            if res <= tol:
                return Point(q)
            raise ConvergenceError(f"line search stalled (residual {res:.3e})", residual=res, iterate=q)
        q, r, res = trial, r_trial, res_trial
    if res <= tol:
        return Point(q)
    raise ConvergenceError(
        f"no convergence in {max_iter} iterations (residual {res:.3e})", residual=res, iterate=q
    )
