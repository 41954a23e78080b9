"""Affine configuration space Q, its model space V and the dual V*.

Points, vectors and covectors are all stored as coordinate tuples relative to
a single origin chart, but they are distinct types: a point may be displaced
by a vector and two points differ by a vector, while adding two points or
pairing two vectors is a ``TypeError``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError

__all__ = [
    "AffineSpace",
    "Point",
    "Vector",
    "Covector",
    "Metric",
    "pair",
    "metric_apply",
    "metric_inverse_apply",
    "displace",
    "difference",
    "coords_of",
]


class _Coords:
    """Immutable finite coordinate tuple."""

    __slots__ = ("_c",)

    def __init__(self, coords):
        if isinstance(coords, _Coords):
            coords = coords._c
        c = np.array(coords, dtype=float).reshape(-1)
        if c.size == 0:
            raise DimensionError(f"{type(self).__name__} needs at least one coordinate")
        if not np.all(np.isfinite(c)):
            raise ValueError(f"{type(self).__name__} coordinates must be finite: {c}")
        c.flags.writeable = False
        self._c = c

    @classmethod
    def zeros(cls, dim: int):
        return cls(np.zeros(dim))

    @classmethod
    def basis(cls, dim: int, i: int):
        e = np.zeros(dim)
        e[i] = 1.0
        return cls(e)

    @property
    def coords(self) -> np.ndarray:
        return self._c

    @property
    def dim(self) -> int:
        return self._c.size

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._c.copy()
        return self._c.astype(dtype)

    def __len__(self):
        return self._c.size

    def __iter__(self):
        return iter(self._c.tolist())

    def __getitem__(self, i):
        return self._c[i]

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return np.array_equal(self._c, other._c)

    def __hash__(self):
        return hash((type(self).__name__, self._c.tobytes()))

    def __repr__(self):
        return f"{type(self).__name__}({self._c.tolist()})"


class _Linear(_Coords):
    """Shared vector-space arithmetic for Vector and Covector."""

    __slots__ = ()

    def _same(self, other):
        if type(other) is not type(self):
            return False
        _check_dims(self, other)
        return True

    def __add__(self, other):
        if not self._same(other):
            return NotImplemented
        return type(self)(self._c + other._c)

    def __sub__(self, other):
        if not self._same(other):
            return NotImplemented
        return type(self)(self._c - other._c)

    def __neg__(self):
        return type(self)(-self._c)

    def __mul__(self, s):
        if isinstance(s, (int, float, np.integer, np.floating)):
            return type(self)(self._c * float(s))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, s):
        if isinstance(s, (int, float, np.integer, np.floating)):
            return type(self)(self._c / float(s))
        return NotImplemented

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self._c)))


class Vector(_Linear):
    """Element of the model space V (displacements, velocities)."""

    __slots__ = ()


class Covector(_Linear):
    """Element of the dual space V* (forces, momenta)."""

    __slots__ = ()


class Point(_Coords):
    """Element of the affine space Q, in the origin chart."""

    __slots__ = ()

    def __add__(self, other):
        if isinstance(other, Vector):
            return displace(self, other)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Point):
            return difference(self, other)
        if isinstance(other, Vector):
            return displace(self, -other)
        return NotImplemented


@dataclass(frozen=True)
class AffineSpace:
    """Affine space of dimension ``dim`` with a fixed origin chart."""

    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise DimensionError(f"dimension must be a positive integer, got {self.dim!r}")

    def origin(self) -> Point:
        return Point.zeros(self.dim)

    def point(self, coords) -> Point:
        return self._check(Point(coords))

    def vector(self, comps) -> Vector:
        return self._check(Vector(comps))

    def covector(self, comps) -> Covector:
        return self._check(Covector(comps))

    def _check(self, x):
        if x.dim != self.dim:
            raise DimensionError(f"expected dimension {self.dim}, got {x.dim}")
        return x


class Metric:
    """Symmetric positive-definite map g: V -> V*.

    The matrix is symmetrized on construction and its Cholesky factor is
    computed eagerly, so a non-SPD input fails here rather than later.
    """

    __slots__ = ("_g", "_cho")

    def __init__(self, matrix):
        g = np.array(matrix, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] == 0:
            raise DimensionError(f"metric must be a non-empty square matrix, got shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError("metric entries must be finite")
        g = 0.5 * (g + g.T)
        try:
            cho = scipy.linalg.cho_factor(g, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise ValueError(f"metric is not positive definite: {exc}") from None
        g.flags.writeable = False
        self._g = g
        self._cho = cho

    @classmethod
    def identity(cls, dim: int) -> "Metric":
        return cls(np.eye(dim))

    @classmethod
    def diagonal(cls, entries) -> "Metric":
        return cls(np.diag(np.asarray(entries, dtype=float)))

    @property
    def matrix(self) -> np.ndarray:
        return self._g

    @property
    def dim(self) -> int:
        return self._g.shape[0]

    def apply(self, v) -> np.ndarray:
        """Raw ``g @ v``; ``v`` may carry trailing sample axes."""
        v = np.asarray(v, dtype=float)
        if v.ndim <= 2:
            return self._g @ v
        return np.tensordot(self._g, v, axes=1)

    def solve(self, p) -> np.ndarray:
        """Raw ``g^{-1} p`` through the Cholesky factors."""
        return scipy.linalg.cho_solve(self._cho, np.asarray(p, dtype=float), check_finite=False)

    def __repr__(self):
        return f"Metric({self._g.tolist()})"


def _check_dims(a, b):
    if len(a) != len(b):
        raise DimensionError(f"dimension mismatch: {len(a)} vs {len(b)}")


def _as(x, cls):
    if isinstance(x, _Coords) and not isinstance(x, cls):
        raise TypeError(f"expected {cls.__name__}, got {type(x).__name__}")
    return x if isinstance(x, cls) else cls(x)


def coords_of(x, cls, dim: int) -> np.ndarray:
    """Raw coordinates of ``x`` checked against ``cls`` and ``dim``.

    Typed inputs of the wrong kind raise ``TypeError``; untyped sequences
    are accepted as coordinates.
    """
    if isinstance(x, _Coords) and not isinstance(x, cls):
        raise TypeError(f"expected {cls.__name__}, got {type(x).__name__}")
    a = np.asarray(x, dtype=float).reshape(-1)
    if a.size != dim:
        raise DimensionError(f"expected dimension {dim}, got {a.size}")
    return a


def pair(f, v) -> float:
    """Duality pairing <f, v> = sum_i f_i v_i of a covector with a vector."""
    f = _as(f, Covector)
    v = _as(v, Vector)
    _check_dims(f, v)
    return float(np.dot(f.coords, v.coords))


def metric_apply(g: Metric, v) -> Covector:
    v = _as(v, Vector)
    if g.dim != v.dim:
        raise DimensionError(f"metric of dimension {g.dim} applied to vector of dimension {v.dim}")
    return Covector(g.apply(v.coords))


def metric_inverse_apply(g: Metric, p) -> Vector:
    p = _as(p, Covector)
    if g.dim != p.dim:
        raise DimensionError(f"metric of dimension {g.dim} applied to covector of dimension {p.dim}")
    return Vector(g.solve(p.coords))


def displace(q, v) -> Point:
    """Affine action q + v."""
    q = _as(q, Point)
    v = _as(v, Vector)
    _check_dims(q, v)
    return Point(q.coords + v.coords)


def difference(q1, q0) -> Vector:
    """The unique vector v with displace(q0, v) == q1."""
    q1 = _as(q1, Point)
    q0 = _as(q0, Point)
    _check_dims(q1, q0)
    return Vector(q1.coords - q0.coords)
