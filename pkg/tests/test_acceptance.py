"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v -s`` or
``python tests/test_acceptance.py``; the lines are also collected into the
pytest terminal summary.
"""

import math
import time
from pathlib import Path

import numpy as np

from varmech.affine import Covector, Metric, Point
from varmech.calculus import ScalarField
from varmech.calculus.expression import parse_expression
from varmech.calculus.quadrature import gauss_legendre_panel, integrate_time
from varmech.distributions import PhasePoint4, infinitesimal_membership
from varmech.dynamics import (
    PhaseTrajectory,
    action,
    action_derivative_by_parts,
    action_derivative_direct,
    dynamics_membership,
    script_D_consistency,
    solve_forward,
    variational_membership,
)
from varmech.errors import EvaluationError
from varmech.hamiltonian import (
    HamiltonianSystem,
    generating_family_membership,
    hamilton_residuals,
    hamiltonian_membership,
    hamiltonian_value,
    legendre,
    legendre_inverse,
)
from varmech.models import LagrangianSystem
from varmech.statics import constitutive_residual, solve_equilibrium
from varmech.systems import (
    HarmonicParams,
    closed_form_arrays,
    closed_form_trajectory,
    make_lagrangian_oscillator,
    make_quartic,
    make_static_oscillator,
    oscillator_hamiltonian,
)
from varmech.trajectory import CovectorCurve, CovectorTriple, Displacement, Motion, perturb

from conftest import random_spd
from exprgen import random_expression, random_point

RESULTS = {}
EPS = np.finfo(float).eps
CORPUS = Path(__file__).parent / "data" / "expressions.txt"


def record(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def random_params(rng, n):
    return HarmonicParams.create(
        m=rng.uniform(0.5, 3), k=rng.uniform(0.5, 3), dim=n, metric=random_spd(rng, n), q0=rng.normal(size=n)
    )


def smooth_motion(rng, n, t0, t1):
    a, b, c, w = rng.normal(size=(4, n))
    freq = rng.uniform(0.5, 2.0)

    def fn(t):
        return np.multiply.outer(a, np.sin(freq * t)) + np.multiply.outer(b, np.cos(t)) + np.multiply.outer(c, t) + w[:, None].reshape((n,) + (1,) * np.ndim(t))

    def dfn(t):
        return freq * np.multiply.outer(a, np.cos(freq * t)) - np.multiply.outer(b, np.sin(t)) + np.multiply.outer(c, np.ones_like(t))

    return Motion.closed_form(fn, dfn, t0, t1)


# ------------------------------------------------------------------ 1


def test_criterion_1_statics():
    rng = np.random.default_rng(0)
    start = time.perf_counter()
    worst_res = worst_inv = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 4))
        p = random_params(rng, n)
        sys = make_static_oscillator(p)
        q = rng.normal(size=n) * 2
        f = p.k * p.g.apply(q - p.q0.coords)
        worst_res = max(worst_res, constitutive_residual(sys, Point(q), Covector(f)))
        sol = solve_equilibrium(sys, Covector(f), Point(rng.normal(size=n)))
        worst_inv = max(worst_inv, float(np.max(np.abs(sol.coords - q))))
    elapsed = time.perf_counter() - start
    ok = worst_res <= 1e-12 and worst_inv <= 1e-9 and elapsed < 1.0
    record(1, ok, f"max residual {worst_res:.2e} (<=1e-12), max inversion error {worst_inv:.2e} (<=1e-9), {elapsed:.2f}s (<1s)")


# ------------------------------------------------------------------ 2


def _expression_system():
    rng = np.random.default_rng(2024)
    while True:
        src = random_expression(rng, 2, depth=3, velocity=True, time=False)
        if "qdot" in src and "q[" in src.replace("qdot[", ""):
            return LagrangianSystem(ScalarField.from_expression(src, 2)), src


def test_criterion_2_variational_derivative():
    rng = np.random.default_rng(0)
    expr_sys, _ = _expression_system()
    systems = [(make_lagrangian_oscillator(HarmonicParams.create(m=1.3, k=0.7, dim=2)), "sho"), (expr_sys, "expression")]
    s = 1e-5
    start = time.perf_counter()
    worst = 0.0
    count = 0
    for sys, _ in systems:
        for _ in range(50):
            t0 = float(rng.uniform(-1, 0))
            t1 = t0 + float(rng.uniform(0.5, 2))
            m = smooth_motion(rng, 2, t0, t1)
            d = Displacement.random_polynomial(rng, 2, t0, t1)
            direct = action_derivative_direct(sys, m, d, 1e-13)
            # the Hermite momentum-rate channel carries ~eps*|pi| noise per cell
            parts = action_derivative_by_parts(sys, m, d, 1e-12)
            fd = (action(sys, perturb(m, d, s), 1e-13) - action(sys, perturb(m, d, -s), 1e-13)) / (2 * s)
            scale = max(abs(direct), abs(parts), abs(fd))
            rel = max(abs(direct - parts), abs(direct - fd), abs(parts - fd)) / scale
            worst = max(worst, rel)
            count += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 10.0
    record(2, ok, f"{count} pairs, max pairwise relative gap {worst:.2e} (<=1e-6), {elapsed:.2f}s (<10s)")


# ------------------------------------------------------------------ 3


def _positive_cases(rng, count):
    cases = []
    for i in range(count):
        n = 2
        sys = make_lagrangian_oscillator(random_params(rng, n))
        t1 = float(rng.uniform(1.0, 3.0))
        if i % 2:
            c = rng.normal(size=n)
            phi = CovectorCurve.closed_form(
                lambda t, c=c: np.multiply.outer(c, np.sin(t)), lambda t, c=c: np.multiply.outer(c, np.cos(t)), 0.0, t1
            )
        else:
            phi = None
        traj = solve_forward(sys, Point(rng.normal(size=n)), Covector(rng.normal(size=n)), phi, 0.0, t1, 256)
        cases.append((sys, traj.xi, traj.triple()))
    return cases


def _negative_cases(rng, positives):
    cases = []
    for i, (sys, xi, c) in enumerate(positives):
        kind = i % 3
        size = 10.0 ** rng.uniform(-3, 0)
        shift = rng.normal(size=c.dim)
        shift *= size / np.max(np.abs(shift))
        if kind == 0:
            bad = CovectorTriple(c.phi, c.p0 + Covector(shift), c.p1)
        elif kind == 1:
            bad = CovectorTriple(c.phi, c.p0, c.p1 + Covector(shift))
        else:
            phi = c.phi
            bad_phi = CovectorCurve.closed_form(
                lambda t, phi=phi, shift=shift: phi.value(t) + np.multiply.outer(shift, np.ones_like(t)), None, phi.t0, phi.t1
            )
            bad = CovectorTriple(bad_phi, c.p0, c.p1)
        cases.append((sys, xi, bad))
    return cases


def test_criterion_3_membership_equivalence():
    rng = np.random.default_rng(0)
    positives = _positive_cases(rng, 20)
    negatives = _negative_cases(rng, positives)
    disagreements = 0
    verdicts = {"positive": [], "negative": []}
    for label, cases in (("positive", positives), ("negative", negatives)):
        for sys, xi, c in cases:
            a = bool(dynamics_membership(sys, xi, c, tol=1e-6))
            b = bool(variational_membership(sys, xi, c, trials=200, seed=0, tol=1e-6))
            disagreements += a != b
            verdicts[label].append(a)
    pos_ok = sum(verdicts["positive"])
    neg_rejected = len(verdicts["negative"]) - sum(verdicts["negative"])
    ok = disagreements == 0 and pos_ok == 20 and neg_rejected == 20
    record(3, ok, f"{disagreements} disagreements over 40 cases; positives accepted {pos_ok}/20, negatives rejected {neg_rejected}/20")


# ------------------------------------------------------------------ 4


def test_criterion_4_oscillator_closed_form():
    p = HarmonicParams.create(m=1.0, k=1.0, dim=3)
    sys = make_lagrangian_oscillator(p)
    qa, pa = np.array([1.0, 0.0, 0.0]), np.zeros(3)

    def sup_error(steps):
        traj = solve_forward(sys, Point(qa), Covector(pa), None, 0.0, 2 * math.pi, steps)
        ts = traj.xi.nodes
        q, mom, _, _ = closed_form_arrays(p, qa, pa, ts)
        return max(np.max(np.abs(traj.xi.value(ts) - q)), np.max(np.abs(traj.pi.value(ts) - mom)))

    # certify the closed form against the elementary solution cos(t) e1, -sin(t) e1
    ts = np.linspace(0, 2 * math.pi, 101)
    q, mom, _, _ = closed_form_arrays(p, qa, pa, ts)
    cert = max(np.max(np.abs(q[0] - np.cos(ts))), np.max(np.abs(mom[0] + np.sin(ts))), np.max(np.abs(q[1:])), np.max(np.abs(mom[1:])))
    start = time.perf_counter()
    e512 = sup_error(512)
    elapsed = time.perf_counter() - start
    e1024 = sup_error(1024)
    ratio = e512 / e1024
    ok = cert <= 1e-15 and e512 <= 1e-6 and ratio >= 12 and elapsed < 1.0
    record(4, ok, f"sup error {e512:.2e} (<=1e-6), halving ratio {ratio:.1f} (>=12), 512-step run {elapsed:.2f}s (<1s)")


# ------------------------------------------------------------------ 5


def _random_subintervals(rng, t0, t1):
    subs = []
    for _ in range(int(rng.integers(2, 5))):
        a, b = np.sort(rng.uniform(t0, t1, 2))
        if b - a < 0.05:
            b = min(t1, a + 0.5)
        subs.append((float(a), float(b)))
    return subs


def test_criterion_5_interval_dirac_equivalence():
    rng = np.random.default_rng(0)
    good = bad = agree = 0
    for i in range(10):
        n = int(rng.integers(1, 4))
        sys = make_lagrangian_oscillator(random_params(rng, n))
        t1 = float(rng.uniform(2, 4))
        traj = solve_forward(sys, Point(rng.normal(size=n)), Covector(rng.normal(size=n)), None, 0.0, t1, 512)
        subs = _random_subintervals(rng, 0.0, t1)
        rep = script_D_consistency(sys, traj, subs, tol=1e-6)
        good += bool(rep)
        agree += rep.agree

        size = 10.0 ** rng.uniform(-3, 0)
        shift = rng.normal(size=n)
        shift *= size / np.max(np.abs(shift))
        nodes = traj.xi.nodes
        if i % 2:
            pi = CovectorCurve.from_grid(traj.pi.value(nodes).T + shift, 0.0, t1)
            corrupt = PhaseTrajectory(traj.xi, traj.phi, pi)
        else:
            phi = CovectorCurve.constant(shift, 0.0, t1)
            corrupt = PhaseTrajectory(traj.xi, phi, traj.pi)
        rep = script_D_consistency(sys, corrupt, subs, tol=1e-6)
        bad += not rep
        agree += rep.agree
    ok = good == 10 and bad == 10 and agree == 20
    record(5, ok, f"solver trajectories accepted {good}/10, corrupted rejected {bad}/10, channels agree {agree}/20")


# ------------------------------------------------------------------ 6


def test_criterion_6_legendre_pipeline():
    rng = np.random.default_rng(0)
    worst_h = worst_round = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 4))
        p = random_params(rng, n)
        sys = make_lagrangian_oscillator(p)
        q, mom = rng.normal(size=(2, n))
        worst_h = max(worst_h, abs(hamiltonian_value(sys, q, mom) - oscillator_hamiltonian(p, q, mom)))
        v = legendre_inverse(sys, q, mom)
        worst_round = max(worst_round, float(np.max(np.abs(legendre(sys, q, v).coords - mom))))
    rho = legendre_inverse(make_quartic(1), [0.0], [8.0]).coords[0]
    ok = worst_h <= 1e-10 and worst_round <= 1e-9 and abs(rho - 2) <= 1e-10
    record(6, ok, f"H error {worst_h:.2e} (<=1e-10), round trip {worst_round:.2e} (<=1e-9), quartic rho(8) - 2 = {rho - 2:.1e}")


# ------------------------------------------------------------------ 7


def test_criterion_7_triple_membership():
    rng = np.random.default_rng(0)
    n = 3
    p = random_params(rng, n)
    sys = make_lagrangian_oscillator(p)
    H = HamiltonianSystem.from_lagrangian(sys)
    identical = members = 0
    for i in range(1000):
        q, qdot = rng.normal(size=(2, n))
        gq, gv = sys.gradients(q, qdot)
        kind = i % 4
        if kind == 0:
            x = PhasePoint4(q, gv, qdot, gq)
        elif kind == 1:
            x = PhasePoint4(q, gv + rng.normal(size=n), qdot, gq)
        elif kind == 2:
            x = PhasePoint4(q, gv, qdot, gq + rng.normal(size=n))
        else:
            x = PhasePoint4(q, rng.normal(size=n), rng.normal(size=n), rng.normal(size=n))
        v = (
            bool(infinitesimal_membership(sys, x, 1e-7)),
            bool(generating_family_membership(sys, x, 1e-7)),
            bool(hamiltonian_membership(H, x, 1e-7)),
        )
        identical += len(set(v)) == 1
        members += v[0]
    ok = identical == 1000 and 0 < members < 1000
    record(7, ok, f"identical verdicts {identical}/1000 ({members} members, {1000 - members} non-members)")


# ------------------------------------------------------------------ 8


def test_criterion_8_hamilton_equations():
    rng = np.random.default_rng(0)
    p = random_params(rng, 3)
    sys = make_lagrangian_oscillator(p)
    H = HamiltonianSystem.from_lagrangian(sys)
    qa, pa = rng.normal(size=(2, 3))
    traj = closed_form_trajectory(p, qa, pa, 0.0, 10.0)
    c = rng.normal(size=3)
    forced = PhaseTrajectory(traj.xi, CovectorCurve.constant(c, 0.0, 10.0), traj.pi)
    worst = shift_err = 0.0
    for t in rng.uniform(0, 10, 100):
        a, b = hamilton_residuals(H, traj, t)
        worst = max(worst, a.norm_inf(), b.norm_inf())
        a2, b2 = hamilton_residuals(H, forced, t)
        # exact up to the rounding of one addition per component
        bound = 4 * EPS * (np.abs(c) + np.abs(traj.pi.rate(t)) + np.abs(H.dH_dq(traj.xi.value(t), traj.pi.value(t)).coords))
        shift_err = max(shift_err, float(np.max(np.abs((a2 - a).coords - c) / bound)))
        assert b2 == b
    ok = worst <= 1e-9 and shift_err <= 1.0
    record(8, ok, f"max residual {worst:.2e} (<=1e-9), force shift equals phi to rounding (worst {shift_err:.2f} of bound)")


# ------------------------------------------------------------------ 9


def test_criterion_9_energy_conservation():
    sys = make_lagrangian_oscillator(HarmonicParams.create(m=1.0, k=1.0, dim=3))
    H = HamiltonianSystem.from_lagrangian(sys)
    traj = solve_forward(sys, Point([1, 0, 0]), Covector([0, 0, 0]), None, 0.0, 2 * math.pi, 512)
    ts = np.linspace(0, 2 * math.pi, 2049)
    values = [H.value(traj.xi.value(t), traj.pi.value(t)) for t in ts]
    spread = max(values) - min(values)
    record(9, spread <= 1e-6, f"max - min of H over [0, 2pi] = {spread:.2e} (<=1e-6)")


# ------------------------------------------------------------------ 10


def _corpus():
    lines = [line.strip() for line in CORPUS.read_text().splitlines()]
    return [line for line in lines if line and not line.startswith("#")]


def test_criterion_10_calculus_layer():
    rng = np.random.default_rng(0)
    worst_grad = 0.0
    valid = 0
    while valid < 100:
        n = int(rng.integers(1, 4))
        fld = ScalarField.from_expression(random_expression(rng, n), n)
        q, v, t = random_point(rng, n)
        try:
            gd = np.concatenate(fld.gradient(q, v, t, mode="dual"))
            gf = np.concatenate(fld.gradient(q, v, t, mode="fd"))
        except EvaluationError:
            continue  # point outside the expression's domain; redraw
        valid += 1
        scale = np.max(np.abs(gd))
        gap = np.max(np.abs(gd - gf))
        worst_grad = max(worst_grad, gap / scale if scale > 0 else gap)

    worst_quad = 0.0
    P = np.polynomial.polynomial
    for degree in range(10):
        for _ in range(20):
            c = rng.uniform(-1, 1, degree + 1)
            a, b = np.sort(rng.uniform(-1, 1, 2))
            exact = P.polyval(b, P.polyint(c)) - P.polyval(a, P.polyint(c))
            f = lambda t, c=c: P.polyval(t, c)  # noqa: E731
            worst_quad = max(worst_quad, abs(gauss_legendre_panel(f, a, b) - exact), abs(integrate_time(f, a, b) - exact))

    unstable = 0
    corpus = _corpus() + [random_expression(rng, 3, params=("a", "b")) for _ in range(100)]
    for src in corpus:
        e = parse_expression(src)
        printed = str(e)
        again = parse_expression(printed)
        unstable += not (again == e and str(again) == printed)
    ok = worst_grad <= 1e-6 and worst_quad <= 1e-13 and unstable == 0
    record(
        10,
        ok,
        f"dual vs FD max relative gap {worst_grad:.2e} (<=1e-6), quadrature error {worst_quad:.2e} (<=1e-13), "
        f"round trip unstable {unstable}/{len(corpus)}",
    )


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
