"""Static and Lagrangian systems: a scalar field bound to a configuration space."""

from __future__ import annotations

import numpy as np

from .affine import AffineSpace
from .calculus.fields import ScalarField
from .errors import DimensionError

__all__ = ["StaticSystem", "LagrangianSystem"]


def _check_space(field: ScalarField, space: AffineSpace | None) -> AffineSpace:
    space = space or AffineSpace(field.dim)
    if space.dim != field.dim:
        raise DimensionError(f"field of dimension {field.dim} on a space of dimension {space.dim}")
    return space


class StaticSystem:
    """Internal energy U: Q -> R.

    The energy is a :class:`ScalarField` that must ignore both the velocity
    and the time slot; it is always evaluated with ``qdot = 0, t = 0``.
    """

    def __init__(self, energy: ScalarField, space: AffineSpace | None = None, name: str | None = None):
        if not energy.autonomous or energy.velocity_dependent:
            raise ValueError("internal energy must depend on the configuration only")
        self.energy = energy
        self.space = _check_space(energy, space)
        self.name = name or energy.name

    @property
    def dim(self) -> int:
        return self.space.dim

    def __repr__(self):
        return f"<StaticSystem {self.name!r} dim={self.dim}>"

    def value(self, q):
        q = np.asarray(q, dtype=float)
        return self.energy.value(q, np.zeros_like(q))

    def force(self, q, mode=None) -> np.ndarray:
        """dU/dq as a raw array."""
        q = np.asarray(q, dtype=float)
        return self.energy.gradient(q, np.zeros_like(q), mode=mode)[0]

    def stiffness(self, q) -> np.ndarray:
        """d^2U/dq^2 at a point."""
        q = np.asarray(q, dtype=float)
        n = self.dim
        return self.energy.hessian(q, np.zeros_like(q))[:n, :n]


class LagrangianSystem:
    """Autonomous Lagrangian L: Q x V -> R."""

    def __init__(self, lagrangian: ScalarField, space: AffineSpace | None = None, name: str | None = None):
        if not lagrangian.autonomous:
            raise ValueError("the Lagrangian of an autonomous system must not depend on time")
        self.lagrangian = lagrangian
        self.space = _check_space(lagrangian, space)
        self.name = name or lagrangian.name

    @property
    def dim(self) -> int:
        return self.space.dim

    def __repr__(self):
        return f"<LagrangianSystem {self.name!r} dim={self.dim}>"

    def value(self, q, v):
        return self.lagrangian.value(q, v)

    def gradients(self, q, v, mode=None):
        """(dL/dq, dL/dqdot) as raw arrays; vectorized over trailing axes."""
        return self.lagrangian.gradient(q, v, mode=mode)

    def dL_dq(self, q, v) -> np.ndarray:
        return self.gradients(q, v)[0]

    def dL_dv(self, q, v) -> np.ndarray:
        return self.gradients(q, v)[1]

    def hessian(self, q, v) -> np.ndarray:
        return self.lagrangian.hessian(q, v)

    def hessian_vv(self, q, v) -> np.ndarray:
        """d^2L/dqdot^2: the Jacobian of the Legendre map in the velocity."""
        n = self.dim
        return self.hessian(q, v)[n:, n:]

    def hessian_vq(self, q, v) -> np.ndarray:
        """d^2L/(dqdot dq): rows index the velocity slot."""
        n = self.dim
        return self.hessian(q, v)[n:, :n]
