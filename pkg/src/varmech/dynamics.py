"""The virtual action principle on finite intervals.

A motion ``xi`` on ``[t0, t1]`` with force ``phi`` and end momenta ``p0, p1``
is in the dynamics when the pairing of the covector triple with every
displacement equals the derivative of the action.  Two independent deciders
are provided:

* :func:`dynamics_membership` checks the Euler-Lagrange residual on a time
  grid plus the momentum-velocity relations at both ends;
* :func:`variational_membership` probes the defining identity directly with
  random polynomial displacements.

``d/dt dL/dqdot`` along a motion is obtained by sampling the momentum
``dL/dqdot(xi, xi')`` on a grid and differentiating the Hermite interpolant:
at the motion's own nodes for grid motions (with the supplied velocities),
on 1024 uniform cells for closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .affine import Covector, Point, coords_of
from .calculus.quadrature import DEFAULT_TOL, integrate_time
from .distributions import Dirac, Interval, PhasePoint4, dirac_reduce, infinitesimal_membership
from .errors import DimensionError, DomainError
from .hamiltonian import solve_velocity
from .models import LagrangianSystem
from .trajectory import (
    CovectorCurve,
    CovectorTriple,
    Displacement,
    Motion,
    _HermiteGrid,
    _same_interval,
    triple_pairing,
)

__all__ = [
    "LagrangianSystem",
    "PhaseTrajectory",
    "action",
    "action_derivative_direct",
    "action_derivative_by_parts",
    "action_derivative",
    "momentum",
    "momentum_curve",
    "el_residual",
    "DynamicsReport",
    "dynamics_membership",
    "VariationalReport",
    "variational_mismatch",
    "variational_membership",
    "solve_forward",
    "lagrange_residuals",
    "ConsistencyReport",
    "script_D_consistency",
    "MIN_STEPS",
]

MIN_STEPS = 8
CLOSED_FORM_CELLS = 1024
CLOSED_FORM_CHECKS = 257


@dataclass(frozen=True)
class PhaseTrajectory:
    """Configuration, force and momentum curves on a common interval."""

    xi: Motion
    phi: CovectorCurve
    pi: CovectorCurve

    def __post_init__(self):
        if not self.xi.dim == self.phi.dim == self.pi.dim:
            raise DimensionError(f"dimension mismatch: {self.xi.dim}, {self.phi.dim}, {self.pi.dim}")
        if not (_same_interval(self.xi.interval, self.phi.interval) and _same_interval(self.xi.interval, self.pi.interval)):
            raise DomainError(
                f"curves on different intervals: {self.xi.interval}, {self.phi.interval}, {self.pi.interval}"
            )

    @property
    def interval(self) -> tuple[float, float]:
        return self.xi.interval

    @property
    def t0(self) -> float:
        return self.xi.t0

    @property
    def t1(self) -> float:
        return self.xi.t1

    @property
    def dim(self) -> int:
        return self.xi.dim

    def restrict(self, a: float, b: float) -> "PhaseTrajectory":
        return PhaseTrajectory(self.xi.restrict(a, b), self.phi.restrict(a, b), self.pi.restrict(a, b))

    def triple(self) -> CovectorTriple:
        """(phi, pi(t0), pi(t1)) for this interval."""
        return CovectorTriple(self.phi, self.pi.at(self.t0), self.pi.at(self.t1))


def zero_force(dim: int, t0: float, t1: float) -> CovectorCurve:
    return CovectorCurve.constant(np.zeros(dim), t0, t1)


def _check_dims(sys, *curves):
    for c in curves:
        if c.dim != sys.dim:
            raise DimensionError(f"curve of dimension {c.dim} for a system of dimension {sys.dim}")


def _covers(curve, a, b, what):
    slack = 1e-12 * max(1.0, abs(a), abs(b))
    if a < curve.t0 - slack or b > curve.t1 + slack:
        raise DomainError(f"{what} on [{curve.t0}, {curve.t1}] does not cover [{a}, {b}]")


def _breaks(*curves):
    return np.concatenate([c.breakpoints() for c in curves])


# ------------------------------------------------------------------ action


def action(sys: LagrangianSystem, m: Motion, tol: float = DEFAULT_TOL) -> float:
    """Integral of L(xi, xi') over the motion's interval."""
    _check_dims(sys, m)

    def integrand(t):
        return sys.value(m.value(t), m.rate(t))

    return integrate_time(integrand, m.t0, m.t1, tol, breakpoints=m.breakpoints())


def action_derivative_direct(sys: LagrangianSystem, m: Motion, d: Displacement, tol: float = DEFAULT_TOL) -> float:
    """Integral of <dL/dq, d> + <dL/dqdot, d'> along the motion."""
    _check_dims(sys, m, d)
    if not _same_interval(m.interval, d.interval):
        raise DomainError(f"motion on {m.interval} varied by displacement on {d.interval}")

    def integrand(t):
        gq, gv = sys.gradients(m.value(t), m.rate(t))
        return np.sum(gq * d.value(t) + gv * d.rate(t), axis=0)

    return integrate_time(integrand, m.t0, m.t1, tol, breakpoints=_breaks(m, d))


@lru_cache(maxsize=64)
def _momentum_grid(sys, rep, cells):
    if isinstance(rep, _HermiteGrid):
        vals = sys.dL_dv(rep.values, rep.derivs)
    else:
        ts = np.linspace(rep.t0, rep.t1, cells + 1)
        vals = sys.dL_dv(rep.value(ts), rep.rate(ts))
    return CovectorCurve.from_grid(vals.T, rep.t0, rep.t1)


def momentum_curve(sys: LagrangianSystem, m: Motion, cells: int = CLOSED_FORM_CELLS) -> CovectorCurve:
    """dL/dqdot along ``m`` as a differentiable grid curve."""
    _check_dims(sys, m)
    return _momentum_grid(sys, m._rep, cells).restrict(m.t0, m.t1)


def momentum(sys: LagrangianSystem, m: Motion, t: float) -> Covector:
    """dL/dqdot(xi(t), xi'(t))."""
    _check_dims(sys, m)
    t = float(t)
    return Covector(sys.dL_dv(m.value(t), m.rate(t)))


def action_derivative_by_parts(
    sys: LagrangianSystem, m: Motion, d: Displacement, tol: float = DEFAULT_TOL
) -> float:
    """Euler-Lagrange integral plus the momentum boundary terms."""
    _check_dims(sys, m, d)
    if not _same_interval(m.interval, d.interval):
        raise DomainError(f"motion on {m.interval} varied by displacement on {d.interval}")
    mc = momentum_curve(sys, m)

    def integrand(t):
        gq = sys.dL_dq(m.value(t), m.rate(t))
        return np.sum((gq - mc.rate(t)) * d.value(t), axis=0)

    bulk = integrate_time(integrand, m.t0, m.t1, tol, breakpoints=_breaks(m, d, mc))
    end = float(np.dot(momentum(sys, m, m.t1).coords, d.value(m.t1)))
    start = float(np.dot(momentum(sys, m, m.t0).coords, d.value(m.t0)))
    return bulk + end - start


def action_derivative(sys: LagrangianSystem, m: Motion, c, d: Displacement, tol: float = DEFAULT_TOL) -> float:
    """Derivative of the action against a distribution.

    For an interval this is :func:`action_derivative_direct` on the
    restricted data; for a delta it is DL(xi(t), xi'(t), d(t), d'(t)).
    """
    if isinstance(c, Interval):
        return action_derivative_direct(sys, m.restrict(c.t0, c.t1), d.restrict(c.t0, c.t1), tol)
    if isinstance(c, Dirac):
        t = float(c.t)
        _covers(m, t, t, "motion")
        _covers(d, t, t, "displacement")
        gq, gv = sys.gradients(m.value(t), m.rate(t))
        return float(np.dot(gq, d.value(t)) + np.dot(gv, d.rate(t)))
    raise TypeError(f"unsupported distribution {c!r}")


# --------------------------------------------------------- EL and membership


def _el_samples(sys, m, phi, ts):
    mc = momentum_curve(sys, m)
    return mc.rate(ts) - sys.dL_dq(m.value(ts), m.rate(ts)) - phi.value(ts)


def el_residual(sys: LagrangianSystem, m: Motion, phi: CovectorCurve, t: float) -> Covector:
    """d/dt dL/dqdot - dL/dq - phi along the motion at ``t``."""
    _check_dims(sys, m, phi)
    _covers(phi, m.t0, m.t1, "force curve")
    return Covector(_el_samples(sys, m, phi, float(t)))


def _check_times(m: Motion) -> np.ndarray:
    if m.is_grid:
        nodes = np.unique(np.concatenate([[m.t0], m.nodes, [m.t1]]))
        mids = 0.5 * (nodes[:-1] + nodes[1:])
        return np.sort(np.concatenate([nodes, mids]))
    return np.linspace(m.t0, m.t1, CLOSED_FORM_CHECKS)


@dataclass
class DynamicsReport:
    """Residual decomposition of interval membership; truthy on membership."""

    member: bool
    el_residual: float
    p0_residual: float
    p1_residual: float
    worst_time: float = float("nan")
    tol: float = 0.0

    def __bool__(self):
        return self.member

    @property
    def residuals(self) -> dict:
        return {"euler_lagrange": self.el_residual, "momentum_t0": self.p0_residual, "momentum_t1": self.p1_residual}


def dynamics_membership(
    sys: LagrangianSystem, m: Motion, c: CovectorTriple, tol: float = 1e-6, times=None
) -> DynamicsReport:
    """EL residual on a time grid and the momentum relations at both ends.

    The default grid is the motion's nodes and cell midpoints (grid motions)
    or 257 uniform points (closed forms).
    """
    _check_dims(sys, m, c.phi)
    if not _same_interval(m.interval, c.interval):
        raise DomainError(f"motion on {m.interval} with covector triple on {c.interval}")
    ts = _check_times(m) if times is None else np.asarray(times, dtype=float)
    el = np.max(np.abs(_el_samples(sys, m, c.phi, ts)), axis=0)
    k = int(np.argmax(el))
    el_max = float(el[k])
    r0 = (momentum(sys, m, m.t0) - c.p0).norm_inf()
    r1 = (momentum(sys, m, m.t1) - c.p1).norm_inf()
    ok = el_max <= tol and r0 <= tol and r1 <= tol
    return DynamicsReport(ok, el_max, r0, r1, float(ts[k]), tol)


def variational_mismatch(
    sys: LagrangianSystem, m: Motion, c: CovectorTriple, d: Displacement, tol: float = DEFAULT_TOL
) -> float:
    """Triple pairing minus the action derivative for one displacement."""
    return triple_pairing(c, d, tol) - action_derivative_direct(sys, m, d, tol)


@dataclass
class VariationalReport:
    """Outcome of the randomized action-principle probe; truthy on membership."""

    member: bool
    max_mismatch: float
    witness: Displacement | None = None
    trials: int = 0
    mismatches: list = field(default_factory=list)

    def __bool__(self):
        return self.member


def variational_membership(
    sys: LagrangianSystem,
    m: Motion,
    c: CovectorTriple,
    trials: int = 200,
    seed: int = 0,
    tol: float = 1e-6,
    quad_tol: float = 1e-10,
    degree: int = 5,
) -> VariationalReport:
    """Probe pairing = action derivative with random polynomial displacements.

    Each probe has coefficients uniform in [-1, 1] in the normalized time
    ``tau in [-1, 1]``.  Probing stops at the first mismatch above ``tol``,
    which is reported as the witness.
    """
    _check_dims(sys, m, c.phi)
    rng = np.random.default_rng(seed)
    mismatches = []
    for k in range(trials):
        d = Displacement.random_polynomial(rng, sys.dim, m.t0, m.t1, degree)
        gap = abs(variational_mismatch(sys, m, c, d, quad_tol))
        mismatches.append(gap)
        if gap > tol:
            return VariationalReport(False, max(mismatches), d, k + 1, mismatches)
    return VariationalReport(True, max(mismatches, default=0.0), None, trials, mismatches)


# ------------------------------------------------------------ forward solve


def solve_forward(
    sys: LagrangianSystem,
    q0,
    p0,
    phi: CovectorCurve | None,
    t0: float,
    t1: float,
    steps: int,
    tol: float = 1e-12,
) -> PhaseTrajectory:
    """Integrate the first-order Lagrange equations with classical RK4.

    The state is (xi, pi) with xi' = rho(xi, pi) and
    pi' = dL/dq(xi, rho(xi, pi)) + phi.  The velocity is re-solved at every
    stage, warm-started from the previous one.  The returned curves are
    Hermite grids on the ``steps + 1`` nodes whose node derivatives are the
    right-hand side itself.

    Raises:
        ValueError: fewer than 8 steps or an empty interval.
        HyperregularityError: the Legendre map became singular.
        ConvergenceError: the velocity solve failed.
    """
    if int(steps) != steps or steps < MIN_STEPS:
        raise ValueError(f"steps must be an integer >= {MIN_STEPS}, got {steps}")
    t0, t1, steps = float(t0), float(t1), int(steps)
    if not t0 < t1:
        raise DomainError(f"need t0 < t1, got [{t0}, {t1}]")
    n = sys.dim
    x = coords_of(q0, Point, n).copy()
    p = coords_of(p0, Covector, n).copy()
    if phi is None:
        phi = zero_force(n, t0, t1)
    _check_dims(sys, phi)
    _covers(phi, t0, t1, "force curve")
    h = (t1 - t0) / steps
    guess = [None]

    def rhs(t, xx, pp):
        v = solve_velocity(sys, xx, pp, guess[0], tol)
        guess[0] = v
        return v, sys.dL_dq(xx, v) + phi.value(t)

    xs = np.empty((steps + 1, n))
    ps = np.empty((steps + 1, n))
    vs = np.empty((steps + 1, n))
    fs = np.empty((steps + 1, n))
    ts = t0 + h * np.arange(steps + 1)
    ts[-1] = t1
    for k in range(steps):
        t = ts[k]
        k1x, k1p = rhs(t, x, p)
        xs[k], ps[k], vs[k], fs[k] = x, p, k1x, k1p
        k2x, k2p = rhs(t + 0.5 * h, x + 0.5 * h * k1x, p + 0.5 * h * k1p)
        k3x, k3p = rhs(t + 0.5 * h, x + 0.5 * h * k2x, p + 0.5 * h * k2p)
        k4x, k4p = rhs(t + h, x + h * k3x, p + h * k3p)
        x = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        p = p + (h / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p)
    vx, vp = rhs(t1, x, p)
    xs[-1], ps[-1], vs[-1], fs[-1] = x, p, vx, vp
    xi = Motion.from_grid(xs, t0, t1, derivatives=vs)
    pi = CovectorCurve.from_grid(ps, t0, t1, derivatives=fs)
    return PhaseTrajectory(xi, phi.restrict(t0, t1), pi)


def lagrange_residuals(sys: LagrangianSystem, traj: PhaseTrajectory, t: float) -> tuple[Covector, Covector]:
    """(dL/dq(xi, xi') - (pi' - phi), dL/dqdot(xi, xi') - pi) at ``t``."""
    _check_dims(sys, traj.xi)
    t = float(t)
    gq, gv = sys.gradients(traj.xi.value(t), traj.xi.rate(t))
    first = gq - (traj.pi.rate(t) - traj.phi.value(t))
    return Covector(first), Covector(gv - traj.pi.value(t))


# ------------------------------------------------ interval vs. Dirac checks


@dataclass
class ConsistencyReport:
    """Both membership channels for a phase trajectory.

    Truthy when the trajectory passes both channels.  ``agree`` records
    whether the interval channel (a) and the Dirac channel (b) returned the
    same verdict, globally and per subinterval.
    """

    channel_a: bool
    channel_b: bool
    subintervals: list
    interval_reports: list
    dirac_worst: float
    dirac_worst_time: float
    per_subinterval_b: list

    def __bool__(self):
        return self.channel_a and self.channel_b

    @property
    def agree(self) -> bool:
        return self.channel_a == self.channel_b

    @property
    def agree_everywhere(self) -> bool:
        return all(bool(r) == b for r, b in zip(self.interval_reports, self.per_subinterval_b))


def dirac_times(traj: PhaseTrajectory) -> np.ndarray:
    """Nodes and cell midpoints of the trajectory (257 points for closed forms)."""
    return _check_times(traj.xi)


def script_D_consistency(
    sys: LagrangianSystem,
    traj: PhaseTrajectory,
    subintervals,
    tol: float = 1e-6,
    times=None,
) -> ConsistencyReport:
    """Check a phase trajectory against the interval and the Dirac dynamics.

    (a) On every subinterval ``[a, b]`` the restricted motion must be in the
    interval dynamics with end momenta ``pi(a)``, ``pi(b)``.
    (b) At every time of a dense grid, ``(xi, pi, xi', pi' - phi)`` must be
    in the infinitesimal dynamics.
    """
    _check_dims(sys, traj.xi)
    subs = [(float(a), float(b)) for a, b in subintervals]
    reports = []
    for a, b in subs:
        part = traj.restrict(a, b)
        reports.append(dynamics_membership(sys, part.xi, part.triple(), tol))
    ts = dirac_times(traj) if times is None else np.asarray(times, dtype=float)
    worst = np.empty(ts.size)
    for k, t in enumerate(ts):
        r, p = dirac_reduce(traj.phi, traj.pi, t)
        x = PhasePoint4(Point(traj.xi.value(t)), p, traj.xi.derivative_at(t), r)
        worst[k] = infinitesimal_membership(sys, x, tol).max_residual
    per_sub_b = [bool(np.all(worst[(ts >= a) & (ts <= b)] <= tol)) for a, b in subs]
    k = int(np.argmax(worst))
    return ConsistencyReport(
        channel_a=all(bool(r) for r in reports),
        channel_b=bool(np.all(worst <= tol)),
        subintervals=subs,
        interval_reports=reports,
        dirac_worst=float(worst[k]),
        dirac_worst_time=float(ts[k]),
        per_subinterval_b=per_sub_b,
    )
