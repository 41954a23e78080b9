"""Motions, displacements, covector curves and the finite-interval pairing.

Every curve lives on a closed interval ``[t0, t1]`` and has one of two
representations:

* closed form: vectorized callables for the value and its derivative;
* uniform grid: ``N + 1`` samples with derivatives, interpolated by C^1
  cubic Hermite splines.  Missing derivatives are filled in with
  fourth-order finite differences (central inside, one-sided at the ends).

``restrict`` returns a view on a sub-interval that shares the underlying
representation.  Raw accessors (``value``, ``rate``) take a float or an
array of times and return arrays shaped ``(dim,)`` or ``(dim, npts)``;
``at`` returns the typed object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .affine import Covector, Point, Vector, coords_of, pair
from .calculus.quadrature import DEFAULT_TOL, integrate_time
from .errors import DimensionError, DomainError

__all__ = [
    "Motion",
    "Displacement",
    "CovectorCurve",
    "CovectorTriple",
    "fd4_derivative",
    "velocity",
    "triple_pairing",
    "perturb",
    "MIN_GRID_INTERVALS",
]

MIN_GRID_INTERVALS = 8

# fourth-order first-derivative stencils on five consecutive nodes
_FD4_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_FD4_FORWARD0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_FD4_FORWARD1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def fd4_derivative(values, h: float) -> np.ndarray:
    """Fourth-order derivative of uniformly sampled data along the last axis."""
    y = np.asarray(values, dtype=float)
    m = y.shape[-1]
    if m < 5:
        raise ValueError("fourth-order differences need at least 5 samples")
    d = np.empty_like(y)
    d[..., 2:-2] = (
        _FD4_CENTRAL[0] * y[..., :-4]
        + _FD4_CENTRAL[1] * y[..., 1:-3]
        + _FD4_CENTRAL[3] * y[..., 3:-1]
        + _FD4_CENTRAL[4] * y[..., 4:]
    )
    d[..., 0] = y[..., :5] @ _FD4_FORWARD0
    d[..., 1] = y[..., :5] @ _FD4_FORWARD1
    d[..., -1] = -(y[..., -1:-6:-1] @ _FD4_FORWARD0)
    d[..., -2] = -(y[..., -1:-6:-1] @ _FD4_FORWARD1)
    return d / h


# ------------------------------------------------------------ representations


class _ClosedForm:
    def __init__(self, fn, deriv, dim, t0, t1):
        self.fn = fn
        self.deriv = deriv
        self.dim = dim
        self.t0 = t0
        self.t1 = t1

    def _eval(self, f, t):
        t = np.asarray(t, dtype=float)
        out = np.asarray(f(t), dtype=float)
        shape = (self.dim,) + t.shape
        if out.shape != shape:
            out = np.broadcast_to(out.reshape((self.dim,) + (1,) * t.ndim), shape)
        return out

    def value(self, t):
        return self._eval(self.fn, t)

    def rate(self, t):
        if self.deriv is None:
            raise ValueError("this closed-form curve has no derivative")
        return self._eval(self.deriv, t)

    def breakpoints(self, a, b):
        return np.empty(0)


class _HermiteGrid:
    def __init__(self, t0, t1, values, derivs):
        self.t0 = float(t0)
        self.t1 = float(t1)
        self.values = values  # (dim, N+1)
        self.derivs = derivs
        self.dim = values.shape[0]
        self.n_intervals = values.shape[1] - 1
        self.h = (self.t1 - self.t0) / self.n_intervals
        self.nodes = np.linspace(self.t0, self.t1, self.n_intervals + 1)

    def _locate(self, t):
        t = np.clip(np.asarray(t, dtype=float), self.t0, self.t1)
        # snap to nodes within a few ulps so node data is returned exactly
        u = (t - self.t0) * (self.n_intervals / (self.t1 - self.t0))
        r = np.rint(u)
        u = np.where(np.abs(u - r) <= 8 * np.finfo(float).eps * max(1.0, self.n_intervals), r, u)
        i = np.clip(np.floor(u).astype(int), 0, self.n_intervals - 1)
        s = np.clip(u - i, 0.0, 1.0)
        return i, s

    def value(self, t):
        i, s = self._locate(t)
        s2, s3 = s * s, s * s * s
        h00 = 2 * s3 - 3 * s2 + 1
        h10 = s3 - 2 * s2 + s
        h01 = -2 * s3 + 3 * s2
        h11 = s3 - s2
        y, d, h = self.values, self.derivs, self.h
        return h00 * y[:, i] + h10 * h * d[:, i] + h01 * y[:, i + 1] + h11 * h * d[:, i + 1]

    def rate(self, t):
        i, s = self._locate(t)
        s2 = s * s
        y, d, h = self.values, self.derivs, self.h
        return (
            (6 * s2 - 6 * s) / h * y[:, i]
            + (3 * s2 - 4 * s + 1) * d[:, i]
            + (6 * s - 6 * s2) / h * y[:, i + 1]
            + (3 * s2 - 2 * s) * d[:, i + 1]
        )

    def breakpoints(self, a, b):
        return self.nodes[(self.nodes > a) & (self.nodes < b)]


# --------------------------------------------------------------------- curves


def _vectorize_scalar_curve(fn, dim):
    def wrapped(t):
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return np.asarray(fn(float(t)), dtype=float).reshape(dim)
        flat = np.array([np.asarray(fn(float(s)), dtype=float).reshape(dim) for s in t.ravel()])
        return flat.T.reshape((dim,) + t.shape)

    return wrapped


class _Curve:
    """Shared machinery; subclasses fix the value and rate types."""

    value_type: type = Vector
    rate_type: type = Vector

    def __init__(self, rep, t0: float, t1: float):
        t0, t1 = float(t0), float(t1)
        if not t0 < t1:
            raise DomainError(f"curve interval needs t0 < t1, got [{t0}, {t1}]")
        slack = 1e-12 * max(1.0, abs(rep.t0), abs(rep.t1))
        if t0 < rep.t0 - slack or t1 > rep.t1 + slack:
            raise DomainError(f"[{t0}, {t1}] is not inside the curve domain [{rep.t0}, {rep.t1}]")
        self._rep = rep
        self.t0 = t0
        self.t1 = t1

    # construction -----------------------------------------------------

    @classmethod
    def closed_form(cls, fn: Callable, deriv: Callable | None, t0: float, t1: float, *, vectorized: bool = True):
        """Curve from ``fn(t)`` and its derivative ``deriv(t)``.

        With ``vectorized=True`` both callables receive arrays of times and
        return arrays shaped ``(dim,) + t.shape``.
        """
        probe = np.asarray(fn(float(t0)) if not vectorized else fn(np.asarray(float(t0))), dtype=float)
        dim = probe.size
        if not vectorized:
            fn = _vectorize_scalar_curve(fn, dim)
            deriv = None if deriv is None else _vectorize_scalar_curve(deriv, dim)
        return cls(_ClosedForm(fn, deriv, dim, float(t0), float(t1)), t0, t1)

    @classmethod
    def from_grid(cls, values, t0: float, t1: float, derivatives=None):
        """Curve through ``values[k]`` at ``t0 + k (t1 - t0) / N``.

        Args:
            values: array of shape ``(N + 1, dim)`` (or ``(N + 1,)`` for
                one-dimensional curves), ``N >= 8``.
            derivatives: same shape, or ``None`` for fourth-order finite
                differences.
        """
        y = np.asarray(values, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if y.ndim != 2:
            raise DimensionError("grid values must be a 2-D array (nodes x dim)")
        n_int = y.shape[0] - 1
        if n_int < MIN_GRID_INTERVALS:
            raise ValueError(f"grid curves need at least {MIN_GRID_INTERVALS} intervals, got {n_int}")
        if not np.all(np.isfinite(y)):
            raise ValueError("grid values must be finite")
        y = np.ascontiguousarray(y.T)
        h = (float(t1) - float(t0)) / n_int
        if derivatives is None:
            d = fd4_derivative(y, h)
        else:
            d = np.asarray(derivatives, dtype=float)
            if d.ndim == 1:
                d = d[:, None]
            d = np.ascontiguousarray(d.T)
            if d.shape != y.shape:
                raise DimensionError(f"derivative grid has shape {d.T.shape}, values {y.T.shape}")
        y.flags.writeable = False
        d.flags.writeable = False
        return cls(_HermiteGrid(t0, t1, y, d), t0, t1)

    @classmethod
    def constant(cls, c, t0: float, t1: float):
        c = np.asarray(c, dtype=float).reshape(-1)
        zero = np.zeros_like(c)
        col = c[:, None]

        def fn(t):
            return np.broadcast_to(col.reshape((c.size,) + (1,) * np.ndim(t)), (c.size,) + np.shape(t))

        def dfn(t):
            return np.broadcast_to(zero.reshape((c.size,) + (1,) * np.ndim(t)), (c.size,) + np.shape(t))

        return cls(_ClosedForm(fn, dfn, c.size, float(t0), float(t1)), t0, t1)

    @classmethod
    def linear(cls, origin, rate, t0: float, t1: float):
        """t -> origin + t * rate."""
        a = np.asarray(origin, dtype=float).reshape(-1)
        b = np.asarray(rate, dtype=float).reshape(-1)
        if a.size != b.size:
            raise DimensionError("origin and rate dimensions differ")

        def fn(t):
            t = np.asarray(t, dtype=float)
            return a.reshape((a.size,) + (1,) * t.ndim) + b.reshape((b.size,) + (1,) * t.ndim) * t

        def dfn(t):
            return np.broadcast_to(b.reshape((b.size,) + (1,) * np.ndim(t)), (b.size,) + np.shape(t))

        return cls(_ClosedForm(fn, dfn, a.size, float(t0), float(t1)), t0, t1)

    # access -----------------------------------------------------------

    @property
    def dim(self) -> int:
        return self._rep.dim

    @property
    def interval(self) -> tuple[float, float]:
        return (self.t0, self.t1)

    @property
    def duration(self) -> float:
        return self.t1 - self.t0

    @property
    def is_grid(self) -> bool:
        return isinstance(self._rep, _HermiteGrid)

    @property
    def nodes(self) -> np.ndarray | None:
        """Grid nodes inside the interval (``None`` for closed forms)."""
        if not self.is_grid:
            return None
        nodes = self._rep.nodes
        slack = 1e-12 * max(1.0, abs(self.t0), abs(self.t1))
        return nodes[(nodes >= self.t0 - slack) & (nodes <= self.t1 + slack)]

    @property
    def base_interval(self) -> tuple[float, float]:
        """Domain of the underlying representation."""
        return (self._rep.t0, self._rep.t1)

    def _check(self, t):
        slack = 1e-12 * max(1.0, abs(self.t0), abs(self.t1))
        if isinstance(t, float):
            if not self.t0 - slack <= t <= self.t1 + slack:
                raise DomainError(f"time {t} outside [{self.t0}, {self.t1}]")
            return min(max(t, self.t0), self.t1)
        t = np.asarray(t, dtype=float)
        if np.any(t < self.t0 - slack) or np.any(t > self.t1 + slack):
            bad = t[(t < self.t0 - slack) | (t > self.t1 + slack)] if t.ndim else t
            raise DomainError(f"time {np.ravel(bad)[0]} outside [{self.t0}, {self.t1}]")
        return np.clip(t, self.t0, self.t1)

    def value(self, t) -> np.ndarray:
        return self._rep.value(self._check(t))

    def rate(self, t) -> np.ndarray:
        return self._rep.rate(self._check(t))

    def at(self, t: float):
        return self.value_type(self.value(float(t)))

    def derivative_at(self, t: float):
        return self.rate_type(self.rate(float(t)))

    __call__ = at

    def breakpoints(self) -> np.ndarray:
        return self._rep.breakpoints(self.t0, self.t1)

    def restrict(self, a: float, b: float):
        """View of the same curve on ``[a, b]``."""
        slack = 1e-12 * max(1.0, abs(self.t0), abs(self.t1))
        if a < self.t0 - slack or b > self.t1 + slack:
            raise DomainError(f"[{a}, {b}] is not inside [{self.t0}, {self.t1}]")
        return type(self)(self._rep, max(a, self.t0), min(b, self.t1))

    def same_rep(self, other) -> bool:
        return self._rep is other._rep

    def __repr__(self):
        kind = f"grid N={self._rep.n_intervals}" if self.is_grid else "closed form"
        return f"<{type(self).__name__} dim={self.dim} on [{self.t0}, {self.t1}] ({kind})>"


class Motion(_Curve):
    """A C^1 curve in the configuration space."""

    value_type = Point
    rate_type = Vector

    def velocity(self, t: float) -> Vector:
        return Vector(self.rate(float(t)))


class Displacement(_Curve):
    """A curve in the model space V, used to vary a motion."""

    value_type = Vector
    rate_type = Vector

    @classmethod
    def polynomial(cls, coeffs, t0: float, t1: float):
        """sum_k coeffs[k] * tau^k with tau = 2 (t - t0) / (t1 - t0) - 1 in [-1, 1].

        ``coeffs`` has shape ``(degree + 1, dim)``.
        """
        c = np.asarray(coeffs, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        t0, t1 = float(t0), float(t1)
        scale = 2.0 / (t1 - t0)
        dc = np.polynomial.polynomial.polyder(c, axis=0) * scale if c.shape[0] > 1 else np.zeros_like(c)

        def tau(t):
            return scale * (np.asarray(t, dtype=float) - t0) - 1.0

        def fn(t):
            return np.polynomial.polynomial.polyval(tau(t), c)

        def dfn(t):
            return np.polynomial.polynomial.polyval(tau(t), dc)

        disp = cls(_ClosedForm(fn, dfn, c.shape[1], t0, t1), t0, t1)
        disp.coefficients = c
        return disp

    @classmethod
    def random_polynomial(cls, rng: np.random.Generator, dim: int, t0: float, t1: float, degree: int = 5):
        """Polynomial probe of the given degree with coefficients uniform in [-1, 1]."""
        return cls.polynomial(rng.uniform(-1.0, 1.0, size=(degree + 1, dim)), t0, t1)

    @classmethod
    def zero(cls, dim: int, t0: float, t1: float):
        return cls.constant(np.zeros(dim), t0, t1)


class CovectorCurve(_Curve):
    """A curve in V*: external forces and momenta."""

    value_type = Covector
    rate_type = Covector


# ------------------------------------------------------------------- triples


@dataclass(frozen=True)
class CovectorTriple:
    """External force curve on [t0, t1] with initial and final momenta."""

    phi: CovectorCurve
    p0: Covector
    p1: Covector

    def __post_init__(self):
        object.__setattr__(self, "p0", Covector(coords_of(self.p0, Covector, self.phi.dim)))
        object.__setattr__(self, "p1", Covector(coords_of(self.p1, Covector, self.phi.dim)))

    @property
    def interval(self) -> tuple[float, float]:
        return self.phi.interval

    @property
    def dim(self) -> int:
        return self.phi.dim


def _same_interval(a, b):
    slack = 1e-12 * max(1.0, abs(a[0]), abs(a[1]))
    return abs(a[0] - b[0]) <= slack and abs(a[1] - b[1]) <= slack


def velocity(m: Motion, t: float) -> Vector:
    return m.velocity(t)


def triple_pairing(c: CovectorTriple, d: Displacement, quad_tol: float = DEFAULT_TOL) -> float:
    """-int <phi, d> + <p1, d(t1)> - <p0, d(t0)> over the shared interval."""
    if not _same_interval(c.interval, d.interval):
        raise DomainError(f"covector on {c.interval} paired with displacement on {d.interval}")
    if c.dim != d.dim:
        raise DimensionError(f"dimension mismatch: {c.dim} vs {d.dim}")
    t0, t1 = d.interval
    phi = c.phi

    def integrand(t):
        return np.sum(phi.value(t) * d.value(t), axis=0)

    bps = np.concatenate([phi.breakpoints(), d.breakpoints()])
    work = integrate_time(integrand, t0, t1, quad_tol, breakpoints=bps)
    return -work + pair(c.p1, d.at(t1)) - pair(c.p0, d.at(t0))


def perturb(m: Motion, d: Displacement, s: float) -> Motion:
    """The motion t -> m(t) + s d(t).

    Two closed forms combine pointwise.  If either operand is a grid, the
    result is a grid on the denser of the grids involved and the other
    operand is evaluated there.
    """
    if not _same_interval(m.interval, d.interval):
        raise DomainError(f"motion on {m.interval} perturbed by displacement on {d.interval}")
    if m.dim != d.dim:
        raise DimensionError(f"dimension mismatch: {m.dim} vs {d.dim}")
    s = float(s)
    t0, t1 = m.interval
    if not m.is_grid and not d.is_grid:

        def fn(t):
            return m.value(t) + s * d.value(t)

        def dfn(t):
            return m.rate(t) + s * d.rate(t)

        return Motion(_ClosedForm(fn, dfn, m.dim, t0, t1), t0, t1)
    spacings = [c._rep.h for c in (m, d) if c.is_grid]
    n_int = max(MIN_GRID_INTERVALS, int(math.ceil((t1 - t0) / min(spacings) - 1e-9)))
    ts = np.linspace(t0, t1, n_int + 1)
    vals = m.value(ts) + s * d.value(ts)
    ders = m.rate(ts) + s * d.rate(ts)
    return Motion.from_grid(vals.T, t0, t1, derivatives=ders.T)
