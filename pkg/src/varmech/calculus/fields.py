"""Scalar fields kappa(q, qdot, t) and their partial derivatives.

Evaluators receive ``q`` and ``qdot`` as indexable sequences of length
``dim`` whose entries are floats, sample arrays, or :class:`~.dual.Dual`
numbers, and ``t`` as a float or array.  Writing an evaluator with plain
arithmetic and the functions from :mod:`varmech.calculus.dual` makes it
usable in every gradient mode.

Raw methods (``value``, ``gradient``, ``hessian``) work on ndarrays, with
``q`` of shape ``(dim,)`` or ``(dim, npts)``.  The module-level operations
(:func:`partial_q`, ...) take and return the typed objects of
:mod:`varmech.affine`.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..affine import Covector, Point, Vector, coords_of, pair
from ..errors import DimensionError, EvaluationError
from .dual import Dual
from .expression import Expression, parse_expression

__all__ = [
    "ScalarField",
    "GRADIENT_MODES",
    "partial_q",
    "partial_qdot",
    "directional",
    "fd_step",
]

GRADIENT_MODES = ("dual", "analytic", "fd")
_CBRT_EPS = np.cbrt(np.finfo(float).eps)


def fd_step(x) -> np.ndarray:
    """Central-difference step cbrt(eps) * max(1, |x|)."""
    return _CBRT_EPS * np.maximum(1.0, np.abs(x))


def _finite(x, what):
    # a finite sum proves every entry finite; otherwise check properly
    if not np.isfinite(np.sum(x)) and not np.all(np.isfinite(x)):
        raise EvaluationError(f"{what} is not finite (division by zero or domain error)")
    return x


class ScalarField:
    """A differentiable function kappa: Q x V x R -> R.

    Args:
        dim: dimension of the configuration space.
        evaluator: ``f(q, qdot, t)`` as described in the module docstring.
        mode: default gradient channel, one of ``"dual"``, ``"analytic"``
            or ``"fd"``.
        gradient: analytic ``(q, qdot, t) -> (dkappa/dq, dkappa/dqdot)``;
            required for ``mode="analytic"``.
        hessian: analytic ``(q, qdot, t) -> (2n, 2n)`` matrix ordered
            ``(q, qdot)``; optional, nested duals are used otherwise.
        autonomous: the evaluator ignores ``t``.
        velocity_dependent: the evaluator reads ``qdot``.
    """

    def __init__(
        self,
        dim: int,
        evaluator: Callable,
        *,
        mode: str = "dual",
        gradient: Callable | None = None,
        hessian: Callable | None = None,
        autonomous: bool = True,
        velocity_dependent: bool = True,
        name: str | None = None,
        expression: Expression | None = None,
    ):
        if int(dim) != dim or dim < 1:
            raise DimensionError(f"dimension must be a positive integer, got {dim!r}")
        if mode not in GRADIENT_MODES:
            raise ValueError(f"gradient mode must be one of {GRADIENT_MODES}, got {mode!r}")
        if mode == "analytic" and gradient is None:
            raise ValueError("analytic mode needs a gradient callable")
        self.dim = int(dim)
        self.evaluator = evaluator
        self.mode = mode
        self._gradient = gradient
        self._hessian = hessian
        self.autonomous = autonomous
        self.velocity_dependent = velocity_dependent
        self.name = name
        self.expression = expression

    @classmethod
    def from_expression(cls, src, dim: int, params=None, mode: str = "dual", name=None) -> "ScalarField":
        expr = src if isinstance(src, Expression) else parse_expression(src, dim=dim, params=params or {})
        if expr.max_index >= dim:
            raise DimensionError(f"expression uses index {expr.max_index} but dim is {dim}")
        return cls(
            dim,
            expr.compile(params),
            mode=mode,
            autonomous=not expr.uses_time,
            velocity_dependent=expr.uses_velocity,
            name=name or str(expr),
            expression=expr,
        )

    def with_mode(self, mode: str) -> "ScalarField":
        return ScalarField(
            self.dim,
            self.evaluator,
            mode=mode,
            gradient=self._gradient,
            hessian=self._hessian,
            autonomous=self.autonomous,
            velocity_dependent=self.velocity_dependent,
            name=self.name,
            expression=self.expression,
        )

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<ScalarField{label} dim={self.dim} mode={self.mode}>"

    # ------------------------------------------------------------ raw API

    def _prepare(self, q, qdot):
        q = np.asarray(q, dtype=float)
        qdot = np.asarray(qdot, dtype=float)
        if q.shape[0] != self.dim or qdot.shape[0] != self.dim:
            raise DimensionError(f"field of dimension {self.dim} evaluated at q{q.shape}, qdot{qdot.shape}")
        if q.shape != qdot.shape:
            q, qdot = np.broadcast_arrays(q, qdot)
        return q, qdot

    def value(self, q, qdot, t=0.0):
        q, qdot = self._prepare(q, qdot)
        with np.errstate(all="ignore"):
            out = self.evaluator(q, qdot, t)
        out = np.broadcast_to(np.asarray(out, dtype=float), q.shape[1:])
        return _finite(out if out.ndim else float(out), "field value")

    def gradient(self, q, qdot, t=0.0, mode: str | None = None):
        """(dkappa/dq, dkappa/dqdot), each shaped like ``q``."""
        mode = mode or self.mode
        q, qdot = self._prepare(q, qdot)
        if mode == "analytic":
            if self._gradient is None:
                raise ValueError("field has no analytic gradient")
            gq, gv = self._gradient(q, qdot, t)
            gq = np.asarray(gq, dtype=float)
            gv = np.asarray(gv, dtype=float)
            if gq.shape != q.shape:
                gq = np.broadcast_to(gq, q.shape).copy()
            if gv.shape != q.shape:
                gv = np.broadcast_to(gv, q.shape).copy()
        elif mode == "dual":
            gq, gv = self._dual_gradient(q, qdot, t)
        elif mode == "fd":
            gq, gv = self._fd_gradient(q, qdot, t)
        else:
            raise ValueError(f"unknown gradient mode {mode!r}")
        return _finite(gq, "dkappa/dq"), _finite(gv, "dkappa/dqdot")

    def _dual_gradient(self, q, qdot, t):
        n = self.dim
        shape = q.shape[1:]
        eye = np.eye(2 * n).reshape((2 * n, 2 * n) + (1,) * len(shape))
        seeds = np.broadcast_to(eye, (2 * n, 2 * n) + shape)
        dq = [Dual(q[i], seeds[i]) for i in range(n)]
        dv = [Dual(qdot[i], seeds[n + i]) for i in range(n)]
        with np.errstate(all="ignore"):
            out = self.evaluator(dq, dv, t)
        if isinstance(out, Dual):
            g = np.broadcast_to(out.eps, (2 * n,) + shape)
        else:
            g = np.zeros((2 * n,) + shape)
        return np.array(g[:n]), np.array(g[n:])

    def _fd_gradient(self, q, qdot, t):
        n = self.dim
        gq = np.empty(q.shape)
        gv = np.empty(q.shape)
        with np.errstate(all="ignore"):
            for slot, base, out in ((0, q, gq), (1, qdot, gv)):
                for i in range(n):
                    h = fd_step(base[i])
                    plus = base.copy()
                    minus = base.copy()
                    plus[i] = base[i] + h
                    minus[i] = base[i] - h
                    # use the actually representable step
                    width = plus[i] - minus[i]
                    if slot == 0:
                        fp = self.evaluator(plus, qdot, t)
                        fm = self.evaluator(minus, qdot, t)
                    else:
                        fp = self.evaluator(q, plus, t)
                        fm = self.evaluator(q, minus, t)
                    out[i] = (np.asarray(fp, dtype=float) - np.asarray(fm, dtype=float)) / width
        return gq, gv

    def hessian(self, q, qdot, t=0.0) -> np.ndarray:
        """Second derivative matrix over ``(q, qdot)`` at a single point."""
        q, qdot = self._prepare(q, qdot)
        if q.ndim != 1:
            raise ValueError("hessian is evaluated pointwise")
        n = self.dim
        if self._hessian is not None:
            h = np.asarray(self._hessian(q, qdot, t), dtype=float)
        elif self.mode == "fd":
            h = np.empty((2 * n, 2 * n))
            x = np.concatenate([q, qdot])
            for k in range(2 * n):
                step = fd_step(x[k])
                xp, xm = x.copy(), x.copy()
                xp[k] += step
                xm[k] -= step
                gp = np.concatenate(self.gradient(xp[:n], xp[n:], t))
                gm = np.concatenate(self.gradient(xm[:n], xm[n:], t))
                h[:, k] = (gp - gm) / (xp[k] - xm[k])
            h = 0.5 * (h + h.T)
        else:
            h = self._dual_hessian(q, qdot, t)
        return _finite(h, "hessian")

    def _dual_hessian(self, q, qdot, t):
        n = self.dim
        x = np.concatenate([q, qdot])
        eye = np.eye(2 * n)
        h = np.empty((2 * n, 2 * n))
        for k in range(2 * n):
            # outer tangent: direction e_k; inner tangent: full gradient
            lifted = [Dual(Dual(x[j], eye[j]), Dual(eye[k, j], np.zeros(2 * n))) for j in range(2 * n)]
            with np.errstate(all="ignore"):
                out = self.evaluator(lifted[:n], lifted[n:], t)
            if isinstance(out, Dual) and isinstance(out.eps, Dual):
                h[k] = np.broadcast_to(out.eps.eps, (2 * n,))
            else:
                h[k] = 0.0
        return h

    def directional_dual(self, q, qdot, t, dq, dqdot) -> float:
        """d/ds kappa(q + s dq, qdot + s dqdot, t) at s=0 with a scalar dual tangent."""
        q, qdot = self._prepare(q, qdot)
        dq = np.broadcast_to(np.asarray(dq, dtype=float), q.shape)
        dqdot = np.broadcast_to(np.asarray(dqdot, dtype=float), q.shape)
        lq = [Dual(q[i], dq[i]) for i in range(self.dim)]
        lv = [Dual(qdot[i], dqdot[i]) for i in range(self.dim)]
        with np.errstate(all="ignore"):
            out = self.evaluator(lq, lv, t)
        d = out.eps if isinstance(out, Dual) else np.zeros(q.shape[1:])
        return _finite(d, "directional derivative")


# ---------------------------------------------------------- typed operations


_raw = coords_of


def partial_q(fld: ScalarField, q, qdot, t=0.0, mode=None) -> Covector:
    gq, _ = fld.gradient(_raw(q, Point, fld.dim), _raw(qdot, Vector, fld.dim), t, mode=mode)
    return Covector(gq)


def partial_qdot(fld: ScalarField, q, qdot, t=0.0, mode=None) -> Covector:
    _, gv = fld.gradient(_raw(q, Point, fld.dim), _raw(qdot, Vector, fld.dim), t, mode=mode)
    return Covector(gv)


def directional(fld: ScalarField, q, qdot, t, dq, dqdot, mode=None) -> float:
    """Total derivative <dk/dq, dq> + <dk/dqdot, dqdot>."""
    gq, gv = fld.gradient(_raw(q, Point, fld.dim), _raw(qdot, Vector, fld.dim), t, mode=mode)
    dq = Vector(_raw(dq, Vector, fld.dim))
    dqdot = Vector(_raw(dqdot, Vector, fld.dim))
    return pair(Covector(gq), dq) + pair(Covector(gv), dqdot)
