import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varmech.affine import Covector, Point
from varmech.dynamics import (
    PhaseTrajectory,
    action,
    action_derivative,
    action_derivative_by_parts,
    action_derivative_direct,
    dynamics_membership,
    el_residual,
    lagrange_residuals,
    momentum,
    script_D_consistency,
    solve_forward,
    variational_membership,
)
from varmech.distributions import Dirac, Interval
from varmech.errors import DomainError
from varmech.hamiltonian import energy
from varmech.systems import HarmonicParams, closed_form_trajectory, make_free_particle, make_lagrangian_oscillator
from varmech.trajectory import CovectorCurve, CovectorTriple, Displacement, Motion, perturb

seeds = st.integers(0, 2**32 - 1)
E1 = np.array([1.0, 0.0, 0.0])


def sho(m=1.0, k=1.0, dim=3):
    return make_lagrangian_oscillator(HarmonicParams.create(m=m, k=k, dim=dim))


def trig_motion(f, df, t0, t1, axis=E1):
    return Motion.closed_form(lambda t: np.multiply.outer(axis, f(t)), lambda t: np.multiply.outer(axis, df(t)), t0, t1)


def cos_motion(t0=0.0, t1=2 * np.pi):
    return trig_motion(np.cos, lambda t: -np.sin(t), t0, t1)


def zero(t0, t1, n=3):
    return CovectorCurve.constant(np.zeros(n), t0, t1)


def wiggle(rng, n, t0, t1):
    """A smooth non-solution motion."""
    a, b, w = rng.normal(size=(3, n))
    return Motion.closed_form(
        lambda t: np.multiply.outer(a, np.sin(t)) + np.multiply.outer(b, np.cos(1.3 * t)) + np.multiply.outer(w, t),
        lambda t: np.multiply.outer(a, np.cos(t)) - 1.3 * np.multiply.outer(b, np.sin(1.3 * t)) + np.multiply.outer(w, np.ones_like(t)),
        t0,
        t1,
    )


@pytest.fixture(scope="module")
def sho_run():
    return solve_forward(sho(), Point([1, 0, 0]), Covector([0, 0, 0]), None, 0.0, 2 * np.pi, 512)


class TestAction:
    def test_kinetic_constant_motion(self):
        assert action(make_free_particle(), Motion.constant([1, 2, 3], 0, 1)) == 0.0

    def test_free_particle_linear(self):
        m = Motion.linear([0, 0, 0], [1, 0, 0], 0, 2)
        assert action(make_free_particle(), m) == pytest.approx(1.0, abs=1e-14)

    def test_sho_full_period(self):
        assert abs(action(sho(), cos_motion())) <= 1e-9


class TestActionDerivative:
    def test_zero_displacement(self):
        assert action_derivative_direct(sho(), cos_motion(), Displacement.zero(3, 0, 2 * np.pi)) == 0.0

    @given(seeds)
    @settings(max_examples=20)
    def test_matches_symmetric_difference(self, seed):
        rng = np.random.default_rng(seed)
        m = wiggle(rng, 3, 0, 2)
        d = Displacement.random_polynomial(rng, 3, 0, 2)
        s = 1e-5
        fd = (action(sho(), perturb(m, d, s), 1e-13) - action(sho(), perturb(m, d, -s), 1e-13)) / (2 * s)
        direct = action_derivative_direct(sho(), m, d)
        assert abs(fd - direct) <= 1e-7 * max(1.0, abs(direct))
        assert abs(fd - action_derivative_by_parts(sho(), m, d)) <= 1e-6 * max(1.0, abs(direct))

    def test_free_particle_hand_integration(self):
        sys = make_free_particle(m=2.0)
        m = Motion.linear([0, 0, 0], [1, 2, 0], 0, 3)
        d = Displacement.linear([5, 5, 5], [0, 1, -1], 0, 3)
        assert action_derivative_direct(sys, m, d) == pytest.approx(2 * 2 * 3, abs=1e-12)

    @given(seeds)
    @settings(max_examples=25)
    def test_direct_equals_by_parts(self, seed):
        rng = np.random.default_rng(seed)
        m = wiggle(rng, 3, 0, 2)
        d = Displacement.random_polynomial(rng, 3, 0, 2)
        assert abs(action_derivative_direct(sho(), m, d) - action_derivative_by_parts(sho(), m, d)) <= 1e-7

    def test_by_parts_on_grid_motion(self):
        rng = np.random.default_rng(4)
        closed = wiggle(rng, 3, 0, 2)
        ts = np.linspace(0, 2, 257)
        grid = Motion.from_grid(closed.value(ts).T, 0, 2, derivatives=closed.rate(ts).T)
        d = Displacement.random_polynomial(rng, 3, 0, 2)
        assert abs(action_derivative_direct(sho(), grid, d) - action_derivative_by_parts(sho(), grid, d)) <= 1e-7

    def test_stationary_for_pinned_displacements(self):
        bump = Displacement.closed_form(
            lambda t: np.stack([np.sin(t) ** 2, np.sin(2 * t), t * (2 * np.pi - t)]),
            lambda t: np.stack([np.sin(2 * t), 2 * np.cos(2 * t), 2 * np.pi - 2 * t]),
            0,
            2 * np.pi,
        )
        assert abs(action_derivative_by_parts(sho(), cos_motion(), bump)) <= 1e-7
        assert abs(action_derivative_direct(sho(), cos_motion(), bump)) <= 1e-7

    def test_constant_kinetic(self):
        d = Displacement.random_polynomial(np.random.default_rng(5), 3, 0, 1)
        assert action_derivative_by_parts(make_free_particle(), Motion.constant([1, 1, 1], 0, 1), d) == 0.0

    def test_endpoint_values_only(self):
        # for a solution, displacements with equal endpoint data give equal derivatives
        d1 = Displacement.linear([1, 0, 2], [0.1, -0.2, 0.3], 0, 2 * np.pi)
        bump = np.stack([np.sin(np.linspace(0, 2 * np.pi, 513)) ** 3] * 3, axis=1)
        d2 = Displacement.from_grid(d1.value(np.linspace(0, 2 * np.pi, 513)).T + bump, 0, 2 * np.pi)
        a = action_derivative_direct(sho(), cos_motion(), d1)
        b = action_derivative_direct(sho(), cos_motion(), d2)
        assert abs(a - b) <= 1e-7

    def test_distribution_forms(self):
        rng = np.random.default_rng(6)
        m = wiggle(rng, 3, 0, 2)
        d = Displacement.random_polynomial(rng, 3, 0, 2)
        sub = action_derivative(sho(), m, Interval(0.5, 1.5), d)
        assert sub == pytest.approx(action_derivative_direct(sho(), m.restrict(0.5, 1.5), d.restrict(0.5, 1.5)))
        gq, gv = sho().gradients(m.value(1.0), m.rate(1.0))
        assert action_derivative(sho(), m, Dirac(1.0), d) == pytest.approx(gq @ d.value(1.0) + gv @ d.rate(1.0))
        with pytest.raises(DomainError):
            action_derivative(sho(), m, Dirac(3.0), d)


class TestELAndMomentum:
    def test_sho_cosine(self):
        for t in (0.0, 0.7, np.pi, 6.0):
            assert el_residual(sho(), cos_motion(), zero(0, 2 * np.pi), t).norm_inf() <= 1e-7

    def test_free_particle(self):
        m = Motion.linear([0, 1, 0], [1, 2, 3], 0, 1)
        assert el_residual(make_free_particle(), m, zero(0, 1), 0.4).norm_inf() <= 1e-12

    def test_residual_is_minus_force(self):
        phi = CovectorCurve.constant(E1, 0, 2 * np.pi)
        r = el_residual(sho(), cos_motion(), phi, 1.0)
        assert np.allclose(r.coords, -E1, atol=1e-7)

    def test_momentum_examples(self):
        assert momentum(sho(), cos_motion(), 0.0).norm_inf() <= 1e-15
        m = Motion.linear([0, 0, 0], [1, -1, 2], 0, 1)
        assert momentum(make_free_particle(m=3.0), m, 0.5) == Covector([3, -3, 6])
        sine = trig_motion(np.sin, np.cos, 0, 1)
        assert momentum(sho(m=2.0), sine, 0.0) == Covector([2, 0, 0])


class TestMembership:
    def quarter(self, p1):
        m = cos_motion(0, np.pi / 2)
        return m, CovectorTriple(zero(0, np.pi / 2), [0, 0, 0], p1)

    def test_quarter_period_member(self):
        m, c = self.quarter([-1, 0, 0])
        assert dynamics_membership(sho(), m, c)
        assert variational_membership(sho(), m, c, trials=50)

    def test_wrong_final_momentum(self):
        m, c = self.quarter([0, 0, 0])
        rep = dynamics_membership(sho(), m, c)
        assert not rep
        assert rep.residuals["momentum_t1"] == pytest.approx(1.0, abs=1e-12)
        assert rep.residuals["euler_lagrange"] <= 1e-7
        assert not variational_membership(sho(), m, c, trials=50)

    def test_free_particle_member(self):
        v = np.array([1.0, -2.0, 0.5])
        sys = make_free_particle(m=2.0)
        m = Motion.linear([0, 0, 0], v, 0, 3)
        c = CovectorTriple(zero(0, 3), 2 * v, 2 * v)
        assert dynamics_membership(sys, m, c)
        assert variational_membership(sys, m, c, trials=50)

    def test_wrong_initial_momentum_witness(self):
        m, c = self.quarter([-1, 0, 0])
        bad = CovectorTriple(c.phi, [0.3, 0, 0], c.p1)
        rep = variational_membership(sho(), m, bad, trials=50)
        assert not rep
        assert abs(rep.witness.value(0.0)[0]) > 0

    def test_zero_probe_passes(self):
        m, c = self.quarter([0, 0, 0])
        assert variational_membership(sho(), m, c, trials=0)

    def test_restriction_closure(self, sho_run):
        for a, b in [(0.0, 1.0), (1.0, 2.0), (0.5, 2.5), (3.0, 6.0)]:
            part = sho_run.restrict(a, b)
            assert dynamics_membership(sho(), part.xi, part.triple())


class TestSolveForward:
    def test_sho_returns(self, sho_run):
        assert np.max(np.abs(sho_run.xi.value(2 * np.pi) - E1)) <= 1e-6

    def test_halved_step_cross_check(self, sho_run):
        fine = solve_forward(sho(), Point([1, 0, 0]), Covector([0, 0, 0]), None, 0.0, 2 * np.pi, 1024)

        def err(traj):
            end = 2 * np.pi
            return max(np.max(np.abs(traj.xi.value(end) - E1)), np.max(np.abs(traj.pi.value(end))))

        assert err(sho_run) / err(fine) == pytest.approx(16, rel=0.1)

    def test_free_particle_exact(self):
        sys = make_free_particle(m=2.0)
        traj = solve_forward(sys, Point([1, 2, 3]), Covector([2, 0, -4]), None, 0.0, 5.0, 16)
        ts = np.linspace(0, 5, 17)
        exact = np.array([1, 2, 3])[:, None] + np.outer([1, 0, -2], ts)
        assert np.max(np.abs(traj.xi.value(ts) - exact)) <= 1e-12

    def test_shifted_equilibrium(self):
        phi = CovectorCurve.constant(2.0 * E1, 0, 3)
        traj = solve_forward(sho(k=2.0), Point(E1), Covector([0, 0, 0]), phi, 0, 3, 32)
        assert np.max(np.abs(traj.xi.value(np.linspace(0, 3, 11)) - E1[:, None])) <= 1e-14

    def test_energy_conservation(self, sho_run):
        def drift(traj):
            ts = traj.xi.nodes
            e = [energy(sho(), traj.xi.value(t), traj.pi.value(t), traj.xi.rate(t)) for t in ts]
            return np.max(np.abs(np.array(e) - e[0]))

        fine = solve_forward(sho(), Point([1, 0, 0]), Covector([0, 0, 0]), None, 0.0, 2 * np.pi, 1024)
        assert drift(sho_run) <= 1e-6
        assert drift(sho_run) / drift(fine) >= 12

    def test_step_count_checked(self):
        with pytest.raises(ValueError):
            solve_forward(sho(), Point(E1), Covector([0, 0, 0]), None, 0, 1, 4)


class TestLagrangeResiduals:
    def test_solver_output(self, sho_run):
        for t in sho_run.xi.nodes:
            a, b = lagrange_residuals(sho(), sho_run, t)
            assert a.norm_inf() <= 1e-6 and b.norm_inf() <= 1e-6

    def test_closed_form(self):
        p = HarmonicParams.create(m=1.0, k=1.0, dim=3)
        traj = closed_form_trajectory(p, Point(E1), Covector([0, 0, 0]), 0, 2 * np.pi)
        for t in np.linspace(0, 2 * np.pi, 13):
            a, b = lagrange_residuals(sho(), traj, t)
            assert a.norm_inf() <= 1e-9 and b.norm_inf() <= 1e-9

    def test_momentum_shift(self):
        p = HarmonicParams.create(m=1.0, k=1.0, dim=3)
        traj = closed_form_trajectory(p, Point(E1), Covector([0, 0, 0]), 0, 2)
        c = np.array([0.5, -1.0, 2.0])
        shifted = PhaseTrajectory(
            traj.xi, traj.phi, CovectorCurve.closed_form(lambda t: traj.pi.value(t) + np.multiply.outer(c, np.ones_like(t)), traj.pi.rate, 0, 2)
        )
        _, b0 = lagrange_residuals(sho(), traj, 1.2)
        _, b1 = lagrange_residuals(sho(), shifted, 1.2)
        assert np.array_equal((b1 - b0).coords, -c)


class TestConsistency:
    SUBS = [(0, 1), (1, 2), (0.5, 2.5)]

    def test_solver_output(self, sho_run):
        rep = script_D_consistency(sho(), sho_run, self.SUBS)
        assert rep and rep.agree and rep.agree_everywhere

    def test_perturbed_momentum(self, sho_run):
        pi = CovectorCurve.from_grid(sho_run.pi.value(sho_run.xi.nodes).T + 1e-3, 0, 2 * np.pi)
        rep = script_D_consistency(sho(), PhaseTrajectory(sho_run.xi, sho_run.phi, pi), self.SUBS)
        assert not rep.channel_a and not rep.channel_b and rep.agree
        assert not rep

    def test_free_particle_exact(self):
        sys = make_free_particle()
        v = np.array([1.0, 2.0, -1.0])
        traj = PhaseTrajectory(Motion.linear([0, 0, 0], v, 0, 3), zero(0, 3), CovectorCurve.constant(v, 0, 3))
        rep = script_D_consistency(sys, traj, self.SUBS)
        assert rep and rep.dirac_worst == 0.0
