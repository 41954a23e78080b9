"""Command-line front end.

Subcommands: ``statics``, ``simulate``, ``check``, ``legendre`` and
``pairing``.  Reports are JSON (sorted keys, shortest round-trip floats) on
stdout, or on stderr when stdout carries CSV.  Exit codes: 0 pass,
1 check failure, 2 solver non-convergence, 3 hyperregularity failure,
64 usage error, 65 input format error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import io as vio
from .affine import Covector, Point
from .calculus.expression import parse_expression
from .distributions import Dirac, PhasePoint4, dirac_reduce, infinitesimal_membership, parse_distribution, unified_pairing
from .dynamics import (
    MIN_STEPS,
    action_derivative,
    dirac_times,
    dynamics_membership,
    lagrange_residuals,
    script_D_consistency,
    solve_forward,
    variational_membership,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DimensionError,
    DomainError,
    EvaluationError,
    ExpressionError,
    HyperregularityError,
    InputFormatError,
)
from .hamiltonian import energy, hyperregularity_probe, solve_velocity
from .statics import constitutive_residual, solve_equilibrium
from .systems import make_system_from_config
from .trajectory import CovectorCurve, Displacement

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_FAIL", "EXIT_SOLVER", "EXIT_HYPERREG", "EXIT_USAGE", "EXIT_INPUT"]

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_SOLVER = 2
EXIT_HYPERREG = 3
EXIT_USAGE = 64
EXIT_INPUT = 65
MAX_GRID_POINTS = 100_000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ----------------------------------------------------------------- parsing


def _vector(text: str, n: int, what: str) -> np.ndarray:
    try:
        x = np.array([float(c) for c in text.split(",")], dtype=float)
    except ValueError:
        raise UsageError(f"{what}: expected {n} comma-separated numbers, got {text!r}") from None
    if x.size != n or not np.all(np.isfinite(x)):
        raise UsageError(f"{what}: expected {n} finite comma-separated numbers, got {text!r}")
    return x


def _force_curve(text: str, n: int, t0: float, t1: float) -> CovectorCurve:
    """``zero`` or n comma-separated expressions in t."""
    if text.strip() == "zero":
        return CovectorCurve.constant(np.zeros(n), t0, t1)
    parts = text.split(",")
    if len(parts) != n:
        raise UsageError(f"--force: expected 'zero' or {n} comma-separated expressions, got {len(parts)}")
    comps = []
    for part in parts:
        try:
            expr = parse_expression(part, dim=0)
        except ExpressionError as exc:
            raise UsageError(f"--force: component {part.strip()!r}: {exc}") from None
        if expr.uses_velocity or expr.max_index >= 0:
            raise UsageError(f"--force: component {part.strip()!r} may only use t")
        comps.append(expr.compile())

    def fn(t):
        shape = np.shape(t)
        return np.stack([np.broadcast_to(np.asarray(f(None, None, t), dtype=float), shape) for f in comps])

    return CovectorCurve.closed_form(fn, None, t0, t1)


def _grid_axes(spec: str, n: int):
    """``LO:HI:N`` for every coordinate, or ``q=LO:HI:N,p=LO:HI:N``."""

    def one(s):
        bits = s.split(":")
        if len(bits) != 3:
            raise UsageError(f"--grid: expected LO:HI:N, got {s!r}")
        try:
            lo, hi, k = float(bits[0]), float(bits[1]), int(bits[2])
        except ValueError:
            raise UsageError(f"--grid: expected LO:HI:N, got {s!r}") from None
        if k < 1:
            raise UsageError("--grid: N must be at least 1")
        return np.linspace(lo, hi, k)

    if "=" in spec:
        axes = {}
        for part in spec.split(","):
            key, _, val = part.partition("=")
            if key.strip() not in ("q", "p"):
                raise UsageError(f"--grid: unknown axis {key!r}")
            axes[key.strip()] = one(val.strip())
        if set(axes) != {"q", "p"}:
            raise UsageError("--grid: both q= and p= ranges are needed")
        qa, pa = axes["q"], axes["p"]
    else:
        qa = pa = one(spec)
    total = qa.size**n * pa.size**n
    if total > MAX_GRID_POINTS:
        raise UsageError(f"--grid: {total} points exceeds the limit of {MAX_GRID_POINTS}")
    mesh = np.meshgrid(*([qa] * n + [pa] * n), indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=1)
    return flat[:, :n], flat[:, n:]


# ---------------------------------------------------------------- reports


def _check(value: float, tol: float) -> dict:
    return {"residual": float(value), "tol": float(tol), "pass": bool(value <= tol)}


def _finite_or_null(obj):
    # strict JSON has no inf/nan
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite_or_null(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_null(v) for v in obj]
    return obj


def _emit(report: dict, stream) -> None:
    stream.write(json.dumps(_finite_or_null(report), sort_keys=True, indent=2, allow_nan=False) + "\n")


def _failures(checks: dict) -> list[str]:
    return [name for name, c in checks.items() if not c["pass"]]


def _load_system(path, role):
    return make_system_from_config(vio.load_config(path), role=role)


# --------------------------------------------------------------- commands


def cmd_statics(args, out, err) -> int:
    sys_ = _load_system(args.config, "static")
    n = sys_.dim
    f = np.zeros(n) if args.force in (None, "zero") else _vector(args.force, n, "--force")
    q_init = None if args.init is None else _vector(args.init, n, "--init")
    report = {"command": "statics", "force": f.tolist()}
    try:
        q = solve_equilibrium(sys_, Covector(f), q_init, tol=args.solver_tol)
    except ConvergenceError as exc:
        report.update({"pass": False, "error": str(exc), "final_residual": exc.residual})
        err.write(f"statics: no convergence, final residual {exc.residual!r}\n")
        _emit(report, out)
        return EXIT_SOLVER
    res = constitutive_residual(sys_, q, Covector(f))
    checks = {"constitutive": _check(res, args.tol)}
    report.update({"q": q.coords.tolist(), "checks": checks, "pass": checks["constitutive"]["pass"]})
    _emit(report, out)
    return EXIT_OK if report["pass"] else EXIT_FAIL


def cmd_simulate(args, out, err) -> int:
    if args.steps < MIN_STEPS:
        raise UsageError(f"--steps must be at least {MIN_STEPS}, got {args.steps}")
    if not args.t1 > args.t0:
        raise UsageError(f"--t1 must exceed --t0 ({args.t0})")
    sys_ = _load_system(args.config, "lagrangian")
    n = sys_.dim
    q0 = _vector(args.q0, n, "--q0")
    p0 = np.zeros(n) if args.p0 is None else _vector(args.p0, n, "--p0")
    phi = _force_curve(args.force, n, args.t0, args.t1)
    traj = solve_forward(sys_, Point(q0), Covector(p0), phi, args.t0, args.t1, args.steps)
    csv_stream = out if vio.is_stdout(args.out) else None
    if csv_stream is None:
        vio.write_trajectory_csv(args.out, traj)
    else:
        vio.write_trajectory_csv(csv_stream, traj)
    res = max(
        float(np.max(np.abs(np.concatenate([r.coords for r in lagrange_residuals(sys_, traj, t)]))))
        for t in traj.xi.nodes
    )
    report = {
        "command": "simulate",
        "steps": args.steps,
        "interval": [args.t0, args.t1],
        "final_q": traj.xi.value(args.t1).tolist(),
        "final_p": traj.pi.value(args.t1).tolist(),
        "max_lagrange_residual": res,
        "pass": True,
    }
    _emit(report, err if csv_stream is not None else out)
    return EXIT_OK


def _random_subintervals(rng, t0, t1, k):
    subs = []
    for _ in range(k):
        a, b = np.sort(rng.uniform(t0, t1, size=2))
        if b - a < 1e-3 * (t1 - t0):
            b = min(t1, a + 0.25 * (t1 - t0))
        subs.append((float(a), float(b)))
    return subs


def cmd_check(args, out, err) -> int:
    sys_ = _load_system(args.config, "lagrangian")
    traj = vio.read_trajectory_csv(args.trajectory)
    if traj.dim != sys_.dim:
        raise InputFormatError(f"trajectory of dimension {traj.dim} for a system of dimension {sys_.dim}")
    tol = args.tol
    checks = {}
    report = {"command": "check", "mode": args.mode, "seed": args.seed, "interval": list(traj.interval)}
    if args.mode in ("interval", "both"):
        dyn = dynamics_membership(sys_, traj.xi, traj.triple(), tol)
        for name, val in dyn.residuals.items():
            checks[f"interval.{name}"] = _check(val, tol)
        var = variational_membership(sys_, traj.xi, traj.triple(), trials=args.probes, seed=args.seed, tol=tol)
        checks["interval.variational"] = _check(var.max_mismatch, tol)
    if args.mode in ("dirac", "both"):
        force_res, mom_res = [], []
        ts = dirac_times(traj)
        for t in ts:
            r, p = dirac_reduce(traj.phi, traj.pi, t)
            x = PhasePoint4(Point(traj.xi.value(t)), p, traj.xi.derivative_at(t), r)
            rep = infinitesimal_membership(sys_, x, tol)
            force_res.append(rep.force_residual.norm_inf())
            mom_res.append(rep.momentum_residual.norm_inf())
        checks["dirac.force"] = _check(max(force_res), tol)
        checks["dirac.momentum"] = _check(max(mom_res), tol)
    if args.mode == "both":
        rng = np.random.default_rng(args.seed)
        subs = _random_subintervals(rng, traj.t0, traj.t1, args.subintervals)
        cons = script_D_consistency(sys_, traj, subs, tol)
        report["consistency"] = {
            "subintervals": subs,
            "channel_a": cons.channel_a,
            "channel_b": cons.channel_b,
            "agree": cons.agree,
        }
        checks["consistency.channel_a"] = _check(0.0 if cons.channel_a else np.inf, tol)
        checks["consistency.channel_b"] = _check(cons.dirac_worst, tol)
    failed = _failures(checks)
    report.update({"checks": _jsonable(checks), "failed": failed, "pass": not failed})
    for name in failed:
        err.write(f"check failed: {name} residual {checks[name]['residual']!r} > tol {tol!r}\n")
    _emit(report, out)
    return EXIT_OK if not failed else EXIT_FAIL


def _jsonable(checks):
    # infinity is not valid JSON; report it as a string
    fixed = {}
    for k, c in checks.items():
        c = dict(c)
        if not np.isfinite(c["residual"]):
            c["residual"] = "inf"
        fixed[k] = c
    return fixed


def cmd_legendre(args, out, err) -> int:
    sys_ = _load_system(args.config, "lagrangian")
    n = sys_.dim
    if (args.grid is None) == (args.points is None):
        raise UsageError("exactly one of --grid and --points is required")
    qs, ps = _grid_axes(args.grid, n) if args.grid is not None else vio.read_points_csv(args.points, n)
    rows = []
    report = {"command": "legendre", "points": int(qs.shape[0]), "cond_max": args.cond_max}
    v = None
    try:
        for q, p in zip(qs, ps):
            v = solve_velocity(sys_, q, p, tol=args.solver_tol)
            rows.append(np.concatenate([q, p, v, [energy(sys_, q, p, v)]]))
    except HyperregularityError as exc:
        report.update(
            {
                "pass": False,
                "hyperregular": False,
                "witness": {"q": q.tolist(), "p": p.tolist()},
                "error": str(exc),
            }
        )
        err.write(f"legendre: Legendre map not invertible at q={q.tolist()}, p={p.tolist()}\n")
        _emit(report, out)
        return EXIT_HYPERREG
    samples = [(r[:n], r[2 * n : 3 * n]) for r in rows]
    probe = hyperregularity_probe(sys_, samples, args.cond_max)
    header = [f"q{i}" for i in range(n)] + [f"p{i}" for i in range(n)] + [f"rho{i}" for i in range(n)] + ["H"]
    csv_stream = out if vio.is_stdout(args.out) else None
    vio.write_table_csv(csv_stream if csv_stream is not None else args.out, header, rows)
    report.update({"hyperregular": probe.hyperregular, "max_condition": probe.max_condition, "pass": probe.hyperregular})
    if not probe.hyperregular:
        q, qdot = probe.witness
        report["witness"] = {"q": q.coords.tolist(), "qdot": qdot.coords.tolist()}
    _emit(report, err if csv_stream is not None else out)
    return EXIT_OK if probe.hyperregular else EXIT_HYPERREG


def cmd_pairing(args, out, err) -> int:
    sys_ = _load_system(args.config, "lagrangian")
    traj = vio.read_trajectory_csv(args.trajectory)
    if traj.dim != sys_.dim:
        raise InputFormatError(f"trajectory of dimension {traj.dim} for a system of dimension {sys_.dim}")
    try:
        dist = parse_distribution(args.dist)
    except (ValueError, DomainError) as exc:
        raise UsageError(f"--dist: {exc}") from None
    lo, hi = dist.support
    if lo < traj.t0 or hi > traj.t1:
        raise UsageError(f"--dist support [{lo}, {hi}] is outside the trajectory [{traj.t0}, {traj.t1}]")
    rng = np.random.default_rng(args.seed)
    n = sys_.dim
    # probe 0 is the zero displacement
    probes = [Displacement.zero(n, traj.t0, traj.t1)]
    probes += [Displacement.random_polynomial(rng, n, traj.t0, traj.t1) for _ in range(args.probes)]
    records = []
    for d in probes:
        lhs = unified_pairing(traj.phi, traj.pi, dist, d)
        rhs = action_derivative(sys_, traj.xi, dist, d)
        records.append({"pairing": lhs, "action_derivative": rhs, "mismatch": abs(lhs - rhs)})
    worst = max(r["mismatch"] for r in records)
    checks = {"pairing_vs_action": _check(worst, args.tol)}
    report = {"command": "pairing", "distribution": str(dist), "seed": args.seed, "probes": records}
    if isinstance(dist, Dirac):
        r, p = dirac_reduce(traj.phi, traj.pi, dist.t)
        x = PhasePoint4(Point(traj.xi.value(dist.t)), p, traj.xi.derivative_at(dist.t), r)
        rep = infinitesimal_membership(sys_, x, args.tol)
        report["residual_pair"] = {
            "dL_dq - r": rep.force_residual.coords.tolist(),
            "dL_dqdot - p": rep.momentum_residual.coords.tolist(),
        }
        checks["dirac.force"] = _check(rep.force_residual.norm_inf(), args.tol)
        checks["dirac.momentum"] = _check(rep.momentum_residual.norm_inf(), args.tol)
    failed = _failures(checks)
    report.update({"checks": checks, "failed": failed, "pass": not failed})
    for name in failed:
        err.write(f"pairing failed: {name} residual {checks[name]['residual']!r} > tol {args.tol!r}\n")
    _emit(report, out)
    return EXIT_OK if not failed else EXIT_FAIL


# ------------------------------------------------------------------ main


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="varmech", description="Virtual work and virtual action computations.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", required=True, help="system config (JSON or YAML)")
        p.add_argument("--timing", action="store_true", help="add wall time to the report")

    p = sub.add_parser("statics", help="solve dU/dq(q) = f")
    common(p)
    p.add_argument("--force", default="zero", help="external force, comma-separated, or 'zero'")
    p.add_argument("--init", help="initial guess for q")
    p.add_argument("--tol", type=float, default=1e-9, help="residual tolerance for the pass verdict")
    p.add_argument("--solver-tol", type=float, default=1e-12)

    p = sub.add_parser("simulate", help="integrate the Lagrange equations with RK4")
    common(p)
    p.add_argument("--q0", required=True)
    p.add_argument("--p0")
    p.add_argument("--force", default="zero", help="'zero' or comma-separated expressions in t")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--steps", type=int, default=512)
    p.add_argument("--out", help="CSV path (default: stdout)")

    p = sub.add_parser("check", help="membership checks on a phase trajectory CSV")
    common(p)
    p.add_argument("--trajectory", required=True)
    p.add_argument("--mode", choices=("interval", "dirac", "both"), default="both")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--probes", type=int, default=50)
    p.add_argument("--subintervals", type=int, default=3)

    p = sub.add_parser("legendre", help="table of (q, p, rho, H)")
    common(p)
    p.add_argument("--grid", help="LO:HI:N for every axis, or q=LO:HI:N,p=LO:HI:N")
    p.add_argument("--points", help="CSV with columns q0..,p0..")
    p.add_argument("--cond-max", type=float, default=1e8)
    p.add_argument("--solver-tol", type=float, default=1e-12)
    p.add_argument("--out", help="CSV path (default: stdout)")

    p = sub.add_parser("pairing", help="probe pairing against the action derivative")
    common(p)
    p.add_argument("--trajectory", required=True)
    p.add_argument("--dist", required=True, help="interval(a,b) or dirac(t)")
    p.add_argument("--probes", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-6)
    return parser


_COMMANDS = {
    "statics": cmd_statics,
    "simulate": cmd_simulate,
    "check": cmd_check,
    "legendre": cmd_legendre,
    "pairing": cmd_pairing,
}


def main(argv=None, stdout=None, stderr=None) -> int:
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    echo = list(sys.argv[1:] if argv is None else argv)
    start = time.perf_counter() if args.timing else None
    out = _ReportStream(out, echo, start)
    err = _ReportStream(err, echo, start)
    try:
        return _COMMANDS[args.command](args, out, err)
    except UsageError as exc:
        err.write(f"varmech {args.command}: usage error: {exc}\n")
        return EXIT_USAGE
    except (ConfigError, InputFormatError, ExpressionError, DimensionError) as exc:
        err.write(f"varmech {args.command}: input error: {exc}\n")
        return EXIT_INPUT
    except HyperregularityError as exc:
        err.write(f"varmech {args.command}: hyperregularity failure: {exc}\n")
        return EXIT_HYPERREG
    except ConvergenceError as exc:
        err.write(f"varmech {args.command}: no convergence (final residual {exc.residual!r}): {exc}\n")
        return EXIT_SOLVER
    except (DomainError, EvaluationError) as exc:
        err.write(f"varmech {args.command}: input error: {exc}\n")
        return EXIT_INPUT


class _ReportStream:
    """Adds the command-line echo (and ``wall_time`` when timed) to JSON reports."""

    def __init__(self, stream, argv, start=None):
        self._stream = stream
        self._argv = argv
        self._start = start

    def write(self, text):
        if text.startswith("{"):
            try:
                report = json.loads(text)
            except json.JSONDecodeError:
                report = None
            if isinstance(report, dict) and "command" in report:
                report["argv"] = self._argv
                if self._start is not None:
                    report["wall_time"] = time.perf_counter() - self._start
                text = json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"
        return self._stream.write(text)


if __name__ == "__main__":
    sys.exit(main())
