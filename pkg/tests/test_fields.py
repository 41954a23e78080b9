import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from varmech.affine import Covector, Point, Vector
from varmech.calculus import ScalarField, directional, fd_step, partial_q, partial_qdot
from varmech.errors import DimensionError, EvaluationError
from varmech.systems import HarmonicParams, make_lagrangian_oscillator, make_static_oscillator

from exprgen import random_expression, random_point

seeds = st.integers(0, 2**32 - 1)


def regular_sample(rng, dim):
    """Random expression field and a point where its gradient exists."""
    while True:
        src = random_expression(rng, dim)
        fld = ScalarField.from_expression(src, dim)
        q, v, t = random_point(rng, dim)
        try:
            fld.gradient(q, v, t, mode="dual")
            fld.gradient(q, v, t, mode="fd")
        except EvaluationError:
            continue
        return src, fld, (q, v, t)


def spring(k=1.0):
    return make_static_oscillator(HarmonicParams.create(m=1.0, k=k, dim=3)).energy


class TestPartialQ:
    def test_spring_force(self):
        g = partial_q(spring(), Point([1, 0, 0]), Vector([0, 0, 0]))
        assert g == Covector([1, 0, 0])

    def test_constant_field(self):
        fld = ScalarField.from_expression("4.5", 2)
        assert partial_q(fld, [1, 2], [0, 0]) == Covector([0, 0])

    def test_product(self):
        fld = ScalarField.from_expression("q[0]*q[1]", 2)
        for mode in ("dual", "fd"):
            g = partial_q(fld, [2, 3], [0, 0], mode=mode)
            assert np.allclose(g.coords, [3, 2], rtol=1e-9)


class TestPartialQdot:
    def test_oscillator_momentum(self):
        lag = make_lagrangian_oscillator(HarmonicParams.create(m=1.0, k=1.0, dim=3)).lagrangian
        assert partial_qdot(lag, [0, 0, 0], [0, -1, 0]) == Covector([0, -1, 0])
        assert partial_qdot(lag.with_mode("dual"), [0, 0, 0], [0, -1, 0]) == Covector([0, -1, 0])

    def test_velocity_independent(self):
        fld = ScalarField.from_expression("q[0]^2", 1)
        assert partial_qdot(fld, [1], [5]) == Covector([0])

    def test_quadratic_form(self):
        fld = ScalarField.from_expression("2*qdot[0]^2 + qdot[1]^2", 2)
        assert partial_qdot(fld, [0, 0], [1, 1]) == Covector([4, 2])


class TestDirectional:
    def test_zero_direction(self):
        fld = ScalarField.from_expression("sin(q[0])*qdot[0]", 1)
        assert directional(fld, [1], [2], 0.0, [0], [0]) == 0.0

    def test_oscillator(self):
        lag = make_lagrangian_oscillator(HarmonicParams.create(m=1.0, k=1.0, dim=3)).lagrangian
        val = directional(lag, [1, 0, 0], [0, 0, 0], 0.0, [1, 0, 0], [0, 0, 0])
        assert val == pytest.approx(-1.0)
        fd = directional(lag.with_mode("fd"), [1, 0, 0], [0, 0, 0], 0.0, [1, 0, 0], [0, 0, 0])
        assert fd == pytest.approx(-1.0, rel=1e-8)

    @given(seeds)
    def test_linear_in_direction(self, seed):
        rng = np.random.default_rng(seed)
        _, fld, (q, v, t) = regular_sample(rng, 2)
        a, b = rng.uniform(-2, 2, 2)
        u1, u2, w1, w2 = (rng.normal(size=2) for _ in range(4))
        lhs = directional(fld, q, v, t, a * u1 + b * u2, a * w1 + b * w2)
        rhs = a * directional(fld, q, v, t, u1, w1) + b * directional(fld, q, v, t, u2, w2)
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))

    def test_scalar_dual_agrees(self):
        fld = ScalarField.from_expression("exp(q[0])*qdot[1]^2", 2)
        q, v, dq, dv = [0.3, 0.1], [1.0, -2.0], [1.0, 2.0], [0.5, -1.0]
        assert fld.directional_dual(np.array(q), np.array(v), 0.0, dq, dv) == pytest.approx(
            directional(fld, q, v, 0.0, dq, dv), rel=1e-14
        )


class TestGradientChannels:
    @given(seeds)
    def test_dual_matches_central_differences(self, seed):
        rng = np.random.default_rng(seed)
        src, fld, (q, v, t) = regular_sample(rng, 3)
        gd = np.concatenate(fld.gradient(q, v, t, mode="dual"))
        gf = np.concatenate(fld.gradient(q, v, t, mode="fd"))
        assert np.all(np.abs(gd - gf) <= 1e-6 * np.maximum(1.0, np.abs(gd))), src

    def test_analytic_mode_requires_gradient(self):
        with pytest.raises(ValueError):
            ScalarField(1, lambda q, v, t: q[0], mode="analytic")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            ScalarField(1, lambda q, v, t: q[0], mode="symbolic")

    def test_vectorized_gradient(self):
        fld = ScalarField.from_expression("q[0]*qdot[1] + t*q[1]", 2)
        q = np.arange(8.0).reshape(2, 4)
        gq, gv = fld.gradient(q, q + 1, np.linspace(0, 1, 4))
        assert gq.shape == gv.shape == (2, 4)
        assert np.allclose(gq[0], q[1] + 1)
        assert np.allclose(gv[1], q[0])

    def test_hessian_nested_duals(self):
        fld = ScalarField.from_expression("q[0]^2*qdot[0] + sin(q[1])", 2)
        h = fld.hessian(np.array([1.0, 0.5]), np.array([2.0, 0.0]))
        expected = np.zeros((4, 4))
        expected[0, 0] = 2 * 2.0
        expected[0, 2] = expected[2, 0] = 2 * 1.0
        expected[1, 1] = -np.sin(0.5)
        assert np.allclose(h, expected, atol=1e-14)

    def test_fd_hessian_is_close(self):
        fld = ScalarField.from_expression("q[0]^2*qdot[0] + sin(q[1])", 2, mode="fd")
        h = fld.hessian(np.array([1.0, 0.5]), np.array([2.0, 0.0]))
        exact = ScalarField.from_expression("q[0]^2*qdot[0] + sin(q[1])", 2).hessian(
            np.array([1.0, 0.5]), np.array([2.0, 0.0])
        )
        assert np.allclose(h, exact, atol=1e-5)

    def test_fd_step(self):
        assert fd_step(0.0) == pytest.approx(np.cbrt(np.finfo(float).eps))
        assert fd_step(-100.0) == pytest.approx(100 * np.cbrt(np.finfo(float).eps))


class TestFieldContract:
    def test_flags_from_expression(self):
        fld = ScalarField.from_expression("q[0] + t", 1)
        assert not fld.autonomous and not fld.velocity_dependent
        assert ScalarField.from_expression("qdot[0]", 1).velocity_dependent

    def test_division_by_zero_reported(self):
        fld = ScalarField.from_expression("1/q[0]", 1)
        with pytest.raises(EvaluationError):
            fld.value(np.array([0.0]), np.array([0.0]))

    def test_dimension_checked(self):
        fld = ScalarField.from_expression("q[0]", 2)
        with pytest.raises(DimensionError):
            fld.value(np.zeros(3), np.zeros(3))
        with pytest.raises(DimensionError):
            ScalarField(0, lambda q, v, t: 0.0)

    def test_typed_inputs_checked(self):
        fld = ScalarField.from_expression("q[0]", 1)
        with pytest.raises(TypeError):
            partial_q(fld, Vector([1.0]), Vector([0.0]))
