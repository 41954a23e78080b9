"""Compactly supported time distributions and the unified covector pairing.

Two variants are supported: the indicator of a closed interval and a Dirac
delta.  Integration against an interval is adaptive quadrature; against a
delta it is point evaluation.  A general smooth-density variant would be a
third frozen dataclass with a ``support`` and its own branch in
:func:`integrate` and :func:`_probe_interval`.

The r-convention ``r = pi' - phi`` lives in :func:`dirac_reduce` only.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .affine import Covector, Point, Vector, coords_of, pair
from .calculus.quadrature import DEFAULT_TOL, integrate_time
from .errors import DimensionError, DomainError
from .models import LagrangianSystem
from .trajectory import CovectorCurve, Displacement

__all__ = [
    "Interval",
    "Dirac",
    "parse_distribution",
    "integrate",
    "unified_pairing",
    "EquivalenceResult",
    "covector_equivalent",
    "PhasePoint4",
    "InfinitesimalReport",
    "infinitesimal_membership",
    "lagrangian_pairing",
    "dirac_reduce",
]


@dataclass(frozen=True)
class Interval:
    """Indicator of ``[t0, t1]``."""

    t0: float
    t1: float

    def __post_init__(self):
        if not (np.isfinite(self.t0) and np.isfinite(self.t1)) or not self.t0 < self.t1:
            raise DomainError(f"interval needs finite t0 < t1, got [{self.t0}, {self.t1}]")

    @property
    def support(self) -> tuple[float, float]:
        return (float(self.t0), float(self.t1))

    def __str__(self):
        return f"interval({self.t0!r},{self.t1!r})"


@dataclass(frozen=True)
class Dirac:
    """Dirac delta at ``t``."""

    t: float

    def __post_init__(self):
        if not np.isfinite(self.t):
            raise DomainError(f"Dirac location must be finite, got {self.t}")

    @property
    def support(self) -> tuple[float, float]:
        return (float(self.t), float(self.t))

    def __str__(self):
        return f"dirac({self.t!r})"


_NUM = r"\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*"
_INTERVAL_RE = re.compile(rf"^\s*interval\s*\({_NUM},{_NUM}\)\s*$")
_DIRAC_RE = re.compile(rf"^\s*dirac\s*\({_NUM}\)\s*$")


def parse_distribution(text: str):
    """Parse ``interval(t0,t1)`` or ``dirac(t)``."""
    m = _INTERVAL_RE.match(text)
    if m:
        return Interval(float(m.group(1)), float(m.group(2)))
    m = _DIRAC_RE.match(text)
    if m:
        return Dirac(float(m.group(1)))
    raise ValueError(f"cannot parse distribution {text!r}; expected interval(t0,t1) or dirac(t)")


def integrate(c, h, tol: float = DEFAULT_TOL, breakpoints=None) -> float:
    """Integral of the time function ``h`` against the distribution ``c``."""
    if isinstance(c, Interval):
        return integrate_time(h, c.t0, c.t1, tol, breakpoints=breakpoints)
    if isinstance(c, Dirac):
        return float(h(float(c.t)))
    raise TypeError(f"unsupported distribution {c!r}")


def _covers(curve, c, what):
    a, b = c.support
    slack = 1e-12 * max(1.0, abs(a), abs(b))
    if a < curve.t0 - slack or b > curve.t1 + slack:
        raise DomainError(f"{what} on [{curve.t0}, {curve.t1}] does not cover the support [{a}, {b}]")


def _bps(c, *curves):
    a, b = c.support
    pts = [cv._rep.breakpoints(a, b) for cv in curves]
    return np.concatenate(pts) if pts else None


def unified_pairing(
    phi: CovectorCurve, pi: CovectorCurve, c, d: Displacement, tol: float = DEFAULT_TOL
) -> float:
    """Integral over ``c`` of <pi' - phi, d> + <pi, d'>."""
    for curve, what in ((phi, "force curve"), (pi, "momentum curve"), (d, "displacement")):
        _covers(curve, c, what)
    if not phi.dim == pi.dim == d.dim:
        raise DimensionError(f"dimension mismatch: {phi.dim}, {pi.dim}, {d.dim}")

    def integrand(t):
        return np.sum((pi.rate(t) - phi.value(t)) * d.value(t) + pi.value(t) * d.rate(t), axis=0)

    return integrate(c, integrand, tol, breakpoints=_bps(c, phi, pi, d) if isinstance(c, Interval) else None)


@dataclass
class EquivalenceResult:
    """Outcome of a randomized equivalence probe; truthy when equivalent."""

    equivalent: bool
    max_difference: float
    witness: Displacement | None = None
    trials: int = 0

    def __bool__(self):
        return self.equivalent


def _probe_interval(c, *curves):
    if isinstance(c, Interval):
        return c.support
    # a delta needs probes defined on a neighbourhood; use the common curve domain
    lo = max(cv.t0 for cv in curves)
    hi = min(cv.t1 for cv in curves)
    return lo, hi


def covector_equivalent(
    phi,
    pi,
    phi2,
    pi2,
    c,
    trials: int = 20,
    tol: float = 1e-8,
    seed: int = 0,
    quad_tol: float = DEFAULT_TOL,
) -> EquivalenceResult:
    """Probe whether (phi, pi) and (phi2, pi2) pair identically against ``c``.

    Each probe is a random polynomial displacement of degree 5 with
    coefficients in [-1, 1].  The first failing probe is returned as the
    witness.
    """
    rng = np.random.default_rng(seed)
    a, b = _probe_interval(c, phi, pi, phi2, pi2)
    worst = 0.0
    for k in range(trials):
        d = Displacement.random_polynomial(rng, phi.dim, a, b)
        diff = abs(unified_pairing(phi, pi, c, d, quad_tol) - unified_pairing(phi2, pi2, c, d, quad_tol))
        worst = max(worst, diff)
        if diff > tol:
            return EquivalenceResult(False, worst, d, k + 1)
    return EquivalenceResult(True, worst, None, trials)


# -------------------------------------------------------- infinitesimal level


@dataclass(frozen=True)
class PhasePoint4:
    """(q, p, qdot, r) with r read as pi' - phi."""

    q: Point
    p: Covector
    qdot: Vector
    r: Covector

    def __post_init__(self):
        n = len(self.q)
        object.__setattr__(self, "q", Point(coords_of(self.q, Point, n)))
        object.__setattr__(self, "p", Covector(coords_of(self.p, Covector, n)))
        object.__setattr__(self, "qdot", Vector(coords_of(self.qdot, Vector, n)))
        object.__setattr__(self, "r", Covector(coords_of(self.r, Covector, n)))

    @property
    def dim(self) -> int:
        return self.q.dim


@dataclass
class InfinitesimalReport:
    """Truthy when both residuals are within tolerance."""

    member: bool
    force_residual: Covector  # dL/dq - r
    momentum_residual: Covector  # dL/dqdot - p
    tol: float = field(default=0.0)

    def __bool__(self):
        return self.member

    @property
    def max_residual(self) -> float:
        return max(self.force_residual.norm_inf(), self.momentum_residual.norm_inf())


def infinitesimal_membership(sys: LagrangianSystem, x: PhasePoint4, tol: float = 1e-9) -> InfinitesimalReport:
    """Is ``x`` in the infinitesimal dynamics: dL/dq = r and dL/dqdot = p?"""
    if x.dim != sys.dim:
        raise DimensionError(f"phase point of dimension {x.dim} for a system of dimension {sys.dim}")
    gq, gv = sys.gradients(x.q.coords, x.qdot.coords)
    rq = Covector(gq - x.r.coords)
    rp = Covector(gv - x.p.coords)
    ok = rq.norm_inf() <= tol and rp.norm_inf() <= tol
    return InfinitesimalReport(ok, rq, rp, tol)


def lagrangian_pairing(x: PhasePoint4, dq, dqdot) -> float:
    """<r, dq> + <p, dqdot>."""
    return pair(x.r, Vector(coords_of(dq, Vector, x.dim))) + pair(x.p, Vector(coords_of(dqdot, Vector, x.dim)))


def dirac_reduce(phi: CovectorCurve, pi: CovectorCurve, t: float) -> tuple[Covector, Covector]:
    """(pi'(t) - phi(t), pi(t))."""
    t = float(t)
    return Covector(pi.rate(t) - phi.value(t)), Covector(pi.value(t))
