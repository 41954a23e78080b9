"""Reference systems and construction of user systems from configs.

The harmonic oscillator comes in a static form (spring energy) and a
dynamic form (kinetic minus spring energy), both with analytic gradients
and Hessians.  Their evaluators are written with plain arithmetic so the
dual-number channels work on them too.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .affine import AffineSpace, Covector, Metric, Point, coords_of
from .calculus.fields import ScalarField
from .dynamics import PhaseTrajectory, zero_force
from .errors import ConfigError, DimensionError, ExpressionError
from .models import LagrangianSystem, StaticSystem
from .trajectory import CovectorCurve, Motion

__all__ = [
    "HarmonicParams",
    "make_static_oscillator",
    "make_lagrangian_oscillator",
    "make_free_particle",
    "make_quartic",
    "make_linear_velocity",
    "closed_form",
    "closed_form_arrays",
    "closed_form_trajectory",
    "oscillator_hamiltonian",
    "make_system_from_config",
]


@dataclass(frozen=True)
class HarmonicParams:
    """Mass ``m``, stiffness ``k``, metric ``g`` and spring centre ``q0``."""

    m: float
    k: float
    g: Metric
    q0: Point

    def __post_init__(self):
        if not (np.isfinite(self.m) and self.m > 0):
            raise ValueError(f"mass must be positive, got {self.m}")
        if not (np.isfinite(self.k) and self.k > 0):
            raise ValueError(f"stiffness must be positive, got {self.k}")
        if not isinstance(self.g, Metric):
            object.__setattr__(self, "g", Metric(self.g))
        object.__setattr__(self, "q0", Point(coords_of(self.q0, Point, self.g.dim)))
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "k", float(self.k))

    @classmethod
    def create(cls, m: float = 1.0, k: float = 1.0, dim: int = 3, metric=None, q0=None) -> "HarmonicParams":
        g = Metric.identity(dim) if metric is None else metric
        g = g if isinstance(g, Metric) else Metric(g)
        return cls(m, k, g, Point.zeros(g.dim) if q0 is None else q0)

    @property
    def dim(self) -> int:
        return self.g.dim

    @property
    def omega(self) -> float:
        return float(np.sqrt(self.k / self.m))


def _quadratic(gm, u):
    """sum_ij g_ij u_i u_j for u a list of numbers, arrays or duals."""
    n = len(u)
    total = 0.0
    for i in range(n):
        row = 0.0
        for j in range(n):
            if gm[i, j] != 0.0:
                row = row + gm[i, j] * u[j]
        total = total + u[i] * row
    return total


def _offset(x, c):
    c = c.reshape((c.size,) + (1,) * (np.ndim(x) - 1))
    return np.asarray(x, dtype=float) - c


def make_static_oscillator(p: HarmonicParams) -> StaticSystem:
    """U(q) = (k/2) <g(q - q0), q - q0>."""
    gm, c, k, n = p.g.matrix, p.q0.coords, p.k, p.dim

    def energy(q, qdot, t):
        u = [q[i] - c[i] for i in range(n)]
        return 0.5 * k * _quadratic(gm, u)

    def gradient(q, qdot, t):
        return k * p.g.apply(_offset(q, c)), np.zeros(np.shape(q))

    def hessian(q, qdot, t):
        h = np.zeros((2 * n, 2 * n))
        h[:n, :n] = k * gm
        return h

    fld = ScalarField(
        n, energy, mode="analytic", gradient=gradient, hessian=hessian, velocity_dependent=False, name="spring"
    )
    return StaticSystem(fld, AffineSpace(n), name="harmonic spring")


def make_lagrangian_oscillator(p: HarmonicParams) -> LagrangianSystem:
    """L(q, v) = (m/2) <g v, v> - (k/2) <g(q - q0), q - q0>."""
    gm, c, m, k, n = p.g.matrix, p.q0.coords, p.m, p.k, p.dim

    def lagrangian(q, v, t):
        u = [q[i] - c[i] for i in range(n)]
        return 0.5 * m * _quadratic(gm, list(v)) - 0.5 * k * _quadratic(gm, u)

    def gradient(q, v, t):
        return -k * p.g.apply(_offset(q, c)), m * p.g.apply(v)

    hess = np.zeros((2 * n, 2 * n))
    hess[:n, :n] = -k * gm
    hess[n:, n:] = m * gm

    fld = ScalarField(
        n, lagrangian, mode="analytic", gradient=gradient, hessian=lambda q, v, t: hess, name="oscillator"
    )
    return LagrangianSystem(fld, AffineSpace(n), name="harmonic oscillator")


def make_free_particle(m: float = 1.0, dim: int = 3, metric=None) -> LagrangianSystem:
    """L(q, v) = (m/2) <g v, v>."""
    if not m > 0:
        raise ValueError(f"mass must be positive, got {m}")
    g = Metric.identity(dim) if metric is None else (metric if isinstance(metric, Metric) else Metric(metric))
    gm, n = g.matrix, g.dim

    def lagrangian(q, v, t):
        return 0.5 * m * _quadratic(gm, list(v))

    def gradient(q, v, t):
        return np.zeros(np.shape(q)), m * g.apply(v)

    hess = np.zeros((2 * n, 2 * n))
    hess[n:, n:] = m * gm
    fld = ScalarField(
        n, lagrangian, mode="analytic", gradient=gradient, hessian=lambda q, v, t: hess, name="free particle"
    )
    return LagrangianSystem(fld, AffineSpace(n), name="free particle")


def make_quartic(dim: int = 1) -> LagrangianSystem:
    """L(q, v) = |v|^4 / 4; the Legendre map v -> |v|^2 v is singular at 0."""

    def lagrangian(q, v, t):
        s = 0.0
        for i in range(dim):
            s = s + v[i] * v[i]
        return 0.25 * s * s

    return LagrangianSystem(ScalarField(dim, lagrangian, name="quartic"), AffineSpace(dim), name="quartic")


def make_linear_velocity(c) -> LagrangianSystem:
    """L(q, v) = <c, v>; the Legendre map is constant."""
    c = np.asarray(c, dtype=float).reshape(-1)
    n = c.size

    def lagrangian(q, v, t):
        s = 0.0
        for i in range(n):
            s = s + c[i] * v[i]
        return s

    return LagrangianSystem(ScalarField(n, lagrangian, name="linear"), AffineSpace(n), name="linear in velocity")


# ------------------------------------------------------------- closed forms


def closed_form_arrays(p: HarmonicParams, q_a, p_a, ts):
    """Unforced oscillator from (q_a, p_a) at time 0, sampled at ``ts``.

    Returns ``(q, momentum, velocity, force_rate)`` arrays of shape
    ``(dim,) + ts.shape``, where ``force_rate`` is the momentum derivative.
    """
    n = p.dim
    ts = np.asarray(ts, dtype=float)
    w = p.omega
    u0 = coords_of(q_a, Point, n) - p.q0.coords
    v0 = p.g.solve(coords_of(p_a, Covector, n)) / p.m
    shape = (n,) + (1,) * ts.ndim
    u0, v0 = u0.reshape(shape), v0.reshape(shape)
    cos, sin = np.cos(w * ts), np.sin(w * ts)
    u = u0 * cos + (v0 / w) * sin
    du = -u0 * w * sin + v0 * cos
    ddu = -(w * w) * u
    q = u + p.q0.coords.reshape(shape)
    mom = p.m * p.g.apply(du)
    dmom = p.m * p.g.apply(ddu)
    return q, mom, du, dmom


def closed_form(p: HarmonicParams, q_a, p_a, t: float) -> tuple[Point, Covector]:
    """Configuration and momentum at time ``t`` of the unforced oscillator.

    With ``w = sqrt(k/m)`` and ``v_a = g^{-1}(p_a) / m`` the displacement from
    the centre is ``u(t) = (q_a - q0) cos(w t) + (v_a / w) sin(w t)`` and the
    momentum is ``m g(u'(t))``.
    """
    q, mom, _, _ = closed_form_arrays(p, q_a, p_a, float(t))
    return Point(q), Covector(mom)


def closed_form_trajectory(p: HarmonicParams, q_a, p_a, t0: float, t1: float) -> PhaseTrajectory:
    """Closed-form phase trajectory on [t0, t1] with initial data at ``t0``."""

    def xi(t):
        return closed_form_arrays(p, q_a, p_a, np.asarray(t) - t0)[0]

    def xi_rate(t):
        return closed_form_arrays(p, q_a, p_a, np.asarray(t) - t0)[2]

    def pi(t):
        return closed_form_arrays(p, q_a, p_a, np.asarray(t) - t0)[1]

    def pi_rate(t):
        return closed_form_arrays(p, q_a, p_a, np.asarray(t) - t0)[3]

    return PhaseTrajectory(
        Motion.closed_form(xi, xi_rate, t0, t1),
        zero_force(p.dim, t0, t1),
        CovectorCurve.closed_form(pi, pi_rate, t0, t1),
    )


def oscillator_hamiltonian(p: HarmonicParams, q, mom) -> float:
    """(1/2m) <p, g^{-1} p> + (k/2) <g(q - q0), q - q0>."""
    n = p.dim
    mom = coords_of(mom, Covector, n)
    u = coords_of(q, Point, n) - p.q0.coords
    return float(np.dot(mom, p.g.solve(mom)) / (2 * p.m) + 0.5 * p.k * np.dot(p.g.apply(u), u))


# ------------------------------------------------------------------ configs

_HARMONIC_KEYS = {"kind", "dim", "m", "k", "metric", "q0", "name"}
_EXPRESSION_KEYS = {"kind", "dim", "lagrangian", "energy", "params", "name"}


def _require(cfg, key):
    if key not in cfg:
        raise ConfigError(f"missing required field {key!r}", field=key)
    return cfg[key]


def _positive(cfg, key):
    x = _require(cfg, key)
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not np.isfinite(x) or x <= 0:
        raise ConfigError(f"field {key!r} must be a positive number, got {x!r}", field=key)
    return float(x)


def _dim(cfg):
    d = _require(cfg, "dim")
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise ConfigError(f"field 'dim' must be an integer >= 1, got {d!r}", field="dim")
    return d


def _unknown(cfg, allowed):
    extra = sorted(set(cfg) - allowed)
    if extra:
        raise ConfigError(f"unknown field {extra[0]!r}", field=extra[0])


def harmonic_params_from_config(cfg: Mapping) -> HarmonicParams:
    n = _dim(cfg)
    m = _positive(cfg, "m")
    k = _positive(cfg, "k")
    metric = cfg.get("metric")
    try:
        g = Metric.identity(n) if metric is None else Metric(np.asarray(metric, dtype=float))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"field 'metric': {exc}", field="metric") from None
    if g.dim != n:
        raise ConfigError(f"field 'metric' must be {n}x{n}", field="metric")
    q0 = cfg.get("q0")
    try:
        centre = Point.zeros(n) if q0 is None else Point(coords_of(q0, Point, n))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"field 'q0': {exc}", field="q0") from None
    return HarmonicParams(m, k, g, centre)


def make_system_from_config(cfg: Mapping, role: str = "lagrangian"):
    """Build a system from a config mapping.

    ``role`` selects the static (``"static"``) or dynamic (``"lagrangian"``)
    reading of a harmonic config; expression configs provide ``energy`` for
    the static role and ``lagrangian`` for the dynamic one.

    Raises:
        ConfigError: schema violations, naming the offending field.
    """
    if not isinstance(cfg, Mapping):
        raise ConfigError("config must be a mapping", field=None)
    if role not in ("static", "lagrangian"):
        raise ValueError(f"role must be 'static' or 'lagrangian', got {role!r}")
    kind = _require(cfg, "kind")
    name = cfg.get("name")
    if kind == "harmonic":
        _unknown(cfg, _HARMONIC_KEYS)
        p = harmonic_params_from_config(cfg)
        return make_static_oscillator(p) if role == "static" else make_lagrangian_oscillator(p)
    if kind != "expression":
        raise ConfigError(f"field 'kind' must be 'harmonic' or 'expression', got {kind!r}", field="kind")
    _unknown(cfg, _EXPRESSION_KEYS)
    n = _dim(cfg)
    params = cfg.get("params") or {}
    if not isinstance(params, Mapping) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in params.values()
    ):
        raise ConfigError("field 'params' must map names to numbers", field="params")
    key = "energy" if role == "static" else "lagrangian"
    src = cfg.get(key)
    if src is None:
        raise ConfigError(f"missing required field {key!r}", field=key)
    if not isinstance(src, str):
        raise ConfigError(f"field {key!r} must be text", field=key)
    try:
        fld = ScalarField.from_expression(src, n, params={k: float(v) for k, v in params.items()}, name=name)
    except (ExpressionError, DimensionError) as exc:
        raise ConfigError(f"field {key!r}: {exc}", field=key) from None
    if role == "static":
        if fld.velocity_dependent or not fld.autonomous:
            raise ConfigError("field 'energy' may only use q", field="energy")
        return StaticSystem(fld, AffineSpace(n), name=name)
    if not fld.autonomous:
        raise ConfigError("field 'lagrangian' must not depend on t", field="lagrangian")
    return LagrangianSystem(fld, AffineSpace(n), name=name)
