"""Energy function, Legendre map, Hamiltonian and Hamilton's equations.

For a hyperregular Lagrangian the velocity ``rho(q, p)`` solving
``dL/dqdot(q, rho) = p`` is found by damped Newton iteration.  A derived
Hamiltonian ``H(q, p) = <p, rho> - L(q, rho)`` has the exact partials
``dH/dq = -dL/dq(q, rho)`` and ``dH/dp = rho`` because the energy is
stationary in the velocity on the critical set; :meth:`HamiltonianSystem.energy_chain_gradient`
recomputes them by dual numbers through the energy and the implicit
derivative of ``rho`` as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .affine import Covector, Point, Vector, coords_of, pair
from .calculus.dual import Dual
from .calculus.fields import ScalarField
from .distributions import PhasePoint4
from .errors import ConvergenceError, DimensionError, HyperregularityError, SingularMatrixError
from .models import LagrangianSystem

__all__ = [
    "energy",
    "legendre",
    "critical_residual",
    "legendre_inverse",
    "solve_velocity",
    "HyperregularityReport",
    "hyperregularity_probe",
    "HamiltonianSystem",
    "hamiltonian_value",
    "MembershipReport",
    "hamiltonian_membership",
    "hamilton_residuals",
    "generating_family_membership",
]

_EPS = np.finfo(float).eps
_COND_SINGULAR = 1e14


def energy(sys: LagrangianSystem, q, p, qdot) -> float:
    """E(q, p, qdot) = <p, qdot> - L(q, qdot)."""
    n = sys.dim
    q = coords_of(q, Point, n)
    qdot = coords_of(qdot, Vector, n)
    return pair(Covector(coords_of(p, Covector, n)), Vector(qdot)) - float(sys.value(q, qdot))


def legendre(sys: LagrangianSystem, q, qdot) -> Covector:
    n = sys.dim
    return Covector(sys.dL_dv(coords_of(q, Point, n), coords_of(qdot, Vector, n)))


def critical_residual(sys: LagrangianSystem, q, p, qdot) -> float:
    """||p - dL/dqdot(q, qdot)||_inf; zero exactly on the critical set."""
    lam = legendre(sys, q, qdot).coords
    return float(np.max(np.abs(coords_of(p, Covector, sys.dim) - lam)))


def _newton_velocity(sys, q, p, v, tol, max_iter, max_halvings):
    r = sys.dL_dv(q, v) - p
    res = float(np.max(np.abs(r)))
    floor = 16 * _EPS * max(1.0, float(np.max(np.abs(p))))
    tol = max(tol, floor)
    for _ in range(max_iter):
        if res <= tol:
            return v
        jac = sys.hessian_vv(q, v)
        try:
            if np.linalg.cond(jac) > _COND_SINGULAR:
                raise np.linalg.LinAlgError
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            raise SingularMatrixError(
                f"Legendre map singular at q={q.tolist()}, v={v.tolist()}", residual=res, iterate=v
            ) from None
        s = 1.0
        for _ in range(max_halvings + 1):
            trial = v + s * step
            r_trial = sys.dL_dv(q, trial) - p
            res_trial = float(np.max(np.abs(r_trial)))
            if res_trial < res:
                break
            s *= 0.5
        else:
            if res <= 4 * tol:
                return v
            raise ConvergenceError(f"velocity line search stalled (residual {res:.3e})", residual=res, iterate=v)
        v, r, res = trial, r_trial, res_trial
    if res <= tol:
        return v
    raise ConvergenceError(f"velocity solve did not converge (residual {res:.3e})", residual=res, iterate=v)


def solve_velocity(
    sys: LagrangianSystem,
    q,
    p,
    v_init=None,
    tol: float = 1e-12,
    max_iter: int = 50,
    max_halvings: int = 40,
) -> np.ndarray:
    """Raw ``rho(q, p)``; see :func:`legendre_inverse`."""
    n = sys.dim
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    starts = [np.zeros(n) if v_init is None else np.asarray(v_init, dtype=float)]
    # a singular Jacobian at the first start (e.g. v = 0 for |v|^4) is not
    # evidence of non-invertibility; retry from v = p before giving up
    starts.append(p.copy())
    singular = None
    for v0 in starts:
        try:
            return _newton_velocity(sys, q, p, v0.copy(), tol, max_iter, max_halvings)
        except SingularMatrixError as exc:
            singular = exc
    raise HyperregularityError(
        f"Legendre map not invertible near q={q.tolist()}, p={p.tolist()}: {singular}",
        residual=singular.residual,
        iterate=singular.iterate,
    )


def legendre_inverse(
    sys: LagrangianSystem,
    q,
    p,
    v_init=None,
    tol: float = 1e-12,
    max_iter: int = 50,
) -> Vector:
    """The velocity rho(q, p) with dL/dqdot(q, rho) = p.

    Damped Newton: the step is halved until the residual decreases, at most
    40 times.  The tolerance is floored at a few ulps of ``|p|``.

    Raises:
        HyperregularityError: the Jacobian d^2L/dqdot^2 is singular at every
            start tried.
        ConvergenceError: the iteration does not reach ``tol``.
    """
    n = sys.dim
    v0 = None if v_init is None else coords_of(v_init, Vector, n)
    return Vector(solve_velocity(sys, coords_of(q, Point, n), coords_of(p, Covector, n), v0, tol, max_iter))


@dataclass
class HyperregularityReport:
    """Truthy when every sample passed; otherwise names the first witness."""

    hyperregular: bool
    max_condition: float
    witness: tuple | None = None
    witness_index: int | None = None

    def __bool__(self):
        return self.hyperregular


def hyperregularity_probe(sys: LagrangianSystem, samples, cond_max: float = 1e8) -> HyperregularityReport:
    """Check that d^2L/dqdot^2 is well conditioned at each ``(q, qdot)`` sample."""
    worst = 0.0
    n = sys.dim
    for i, (q, qdot) in enumerate(samples):
        q = coords_of(q, Point, n)
        qdot = coords_of(qdot, Vector, n)
        jac = sys.hessian_vv(q, qdot)
        with np.errstate(all="ignore"):
            cond = float(np.linalg.cond(jac))
        if not np.isfinite(cond):
            cond = np.inf
        worst = max(worst, cond)
        if cond > cond_max:
            return HyperregularityReport(False, worst, (Point(q), Vector(qdot)), i)
    return HyperregularityReport(True, worst)


# ------------------------------------------------------------- Hamiltonians


class HamiltonianSystem:
    """H(q, p) with its partials.

    Build one with :meth:`from_lagrangian`, :meth:`from_field` (the field's
    velocity slot holds ``p``), or directly from three callables on raw
    arrays.
    """

    def __init__(
        self,
        dim: int,
        value: Callable,
        dH_dq: Callable,
        dH_dp: Callable,
        *,
        name: str | None = None,
        source: LagrangianSystem | None = None,
        tol: float = 1e-12,
    ):
        self.dim = int(dim)
        self._value = value
        self._dq = dH_dq
        self._dp = dH_dp
        self.name = name
        self.source = source
        self.tol = tol

    @classmethod
    def from_lagrangian(cls, sys: LagrangianSystem, tol: float = 1e-12) -> "HamiltonianSystem":
        def rho(q, p):
            return solve_velocity(sys, q, p, tol=tol)

        def value(q, p):
            v = rho(q, p)
            return float(np.dot(p, v) - sys.value(q, v))

        def dq(q, p):
            return -sys.dL_dq(q, rho(q, p))

        return cls(sys.dim, value, dq, rho, name=sys.name, source=sys, tol=tol)

    @classmethod
    def from_field(cls, fld: ScalarField) -> "HamiltonianSystem":
        def dq(q, p):
            return fld.gradient(q, p)[0]

        def dp(q, p):
            return fld.gradient(q, p)[1]

        return cls(fld.dim, lambda q, p: float(fld.value(q, p)), dq, dp, name=fld.name)

    @property
    def derived(self) -> bool:
        return self.source is not None

    def __repr__(self):
        kind = "derived" if self.derived else "supplied"
        return f"<HamiltonianSystem {self.name!r} dim={self.dim} ({kind})>"

    def _args(self, q, p):
        return coords_of(q, Point, self.dim), coords_of(p, Covector, self.dim)

    def value(self, q, p) -> float:
        return float(self._value(*self._args(q, p)))

    def dH_dq(self, q, p) -> Covector:
        return Covector(self._dq(*self._args(q, p)))

    def dH_dp(self, q, p) -> Vector:
        return Vector(self._dp(*self._args(q, p)))

    def velocity(self, q, p) -> Vector:
        """rho(q, p) for derived systems, dH/dp otherwise."""
        return self.dH_dp(q, p)

    def energy_chain_gradient(self, q, p) -> tuple[Covector, Vector]:
        """(dH/dq, dH/dp) by dual numbers through E(q, p, rho(q, p)).

        The tangent of ``rho`` comes from the implicit function theorem,
        ``D rho (dq, dp) = J^{-1} (dp - B dq)`` with ``J = d^2L/dqdot^2`` and
        ``B = d^2L/(dqdot dq)``; the energy is then differentiated along the
        lifted direction without using its stationarity.
        """
        if self.source is None:
            raise ValueError("the energy chain applies to Hamiltonians derived from a Lagrangian")
        sys = self.source
        n = self.dim
        q, p = self._args(q, p)
        v = solve_velocity(sys, q, p, tol=self.tol)
        hess = sys.hessian(q, v)
        jac, mixed = hess[n:, n:], hess[n:, :n]
        drho = np.linalg.solve(jac, np.hstack([-mixed, np.eye(n)]))  # n x 2n
        eye = np.eye(2 * n)
        qd = [Dual(q[i], eye[i]) for i in range(n)]
        pd = [Dual(p[i], eye[n + i]) for i in range(n)]
        vd = [Dual(v[i], drho[i]) for i in range(n)]
        with np.errstate(all="ignore"):
            lag = sys.lagrangian.evaluator(qd, vd, 0.0)
        e = sum((pd[i] * vd[i] for i in range(n)), Dual(0.0, np.zeros(2 * n))) - lag
        g = np.asarray(e.eps, dtype=float)
        return Covector(g[:n]), Vector(g[n:])


def hamiltonian_value(sys: LagrangianSystem, q, p, tol: float = 1e-12) -> float:
    """H(q, p) = E(q, p, rho(q, p))."""
    v = legendre_inverse(sys, q, p, tol=tol)
    return energy(sys, q, p, v)


@dataclass
class MembershipReport:
    """Truthy when every residual is within tolerance."""

    member: bool
    residuals: dict

    def __bool__(self):
        return self.member

    @property
    def max_residual(self) -> float:
        return max(float(np.max(np.abs(np.asarray(r)))) for r in self.residuals.values())


def hamiltonian_membership(H: HamiltonianSystem, x: PhasePoint4, tol: float = 1e-9) -> MembershipReport:
    """dH/dq(q, p) = -r and dH/dp(q, p) = qdot."""
    if x.dim != H.dim:
        raise DimensionError(f"phase point of dimension {x.dim} for a Hamiltonian of dimension {H.dim}")
    rq = H.dH_dq(x.q, x.p) + x.r
    rp = H.dH_dp(x.q, x.p) - x.qdot
    ok = rq.norm_inf() <= tol and rp.norm_inf() <= tol
    return MembershipReport(ok, {"dH_dq + r": rq, "dH_dp - qdot": rp})


def hamilton_residuals(H: HamiltonianSystem, traj, t: float) -> tuple[Covector, Vector]:
    """((phi - pi') - dH/dq(xi, pi), dH/dp(xi, pi) - xi') at ``t``.

    The first component is oriented so that adding a constant ``c`` to the
    force shifts it by ``+c``.
    """
    t = float(t)
    q = traj.xi.value(t)
    p = traj.pi.value(t)
    first = (traj.phi.value(t) - traj.pi.rate(t)) - H.dH_dq(q, p).coords
    second = H.dH_dp(q, p).coords - traj.xi.rate(t)
    return Covector(first), Vector(second)


def generating_family_membership(sys: LagrangianSystem, x: PhasePoint4, tol: float = 1e-9) -> MembershipReport:
    """Membership in the set generated by the energy family.

    The existential velocity is resolved as ``v = rho(q, p)``; the defining
    identity <r, dq> - <dp, qdot> = -DE(q, p, v, dq, dp, dv) is then probed
    with the 3n basis directions, DE being taken by dual numbers.
    """
    n = sys.dim
    if x.dim != n:
        raise DimensionError(f"phase point of dimension {x.dim} for a system of dimension {n}")
    q, p, qdot, r = x.q.coords, x.p.coords, x.qdot.coords, x.r.coords
    v = solve_velocity(sys, q, p)
    fld = sys.lagrangian
    zero = np.zeros(n)
    eye = np.eye(n)

    def de(dq, dp, dv):
        return float(np.dot(dp, v) + np.dot(p, dv) - fld.directional_dual(q, v, 0.0, dq, dv))

    res = np.empty(3 * n)
    for i in range(n):
        e = eye[i]
        res[i] = np.dot(r, e) + de(e, zero, zero)
        res[n + i] = -np.dot(e, qdot) + de(zero, e, zero)
        res[2 * n + i] = de(zero, zero, e)
    ok = float(np.max(np.abs(res))) <= tol
    return MembershipReport(ok, {"dq probes": res[:n], "dp probes": res[n : 2 * n], "dv probes": res[2 * n :]})
