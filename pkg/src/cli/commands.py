"""
Subcommands of the ``gtare`` command line.

Every command returns a process exit code: 0 success, 1 input error,
2 solver error, 3 certificate rejected. Results and errors are printed to
stdout as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src.certify import check_certificate
from src.errors import EXIT_CERTIFICATE_REJECTED, EXIT_INPUT, EXIT_OK, EXIT_SOLVER, GtareError, InvalidSimConfig
from src.model import in_dom_G, residual_G, validate
from src.numerics import get_tolerances
from src.sim import SimConfig, estimate_cost, simulate, value_check
from src.solver import SolveOptions, solve_gtare

from .problem_file import load_certificate, load_gains, load_problem, load_solution_matrix, write_json
from .trace import trace_frame, trajectory_frame, write_csv

logger = logging.getLogger(__name__)


def configure_logging(verbosity: int = 0) -> None:
    """Root logger level from -v flags, falling back to GTARE_LOG_LEVEL (default WARNING)."""
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        name = os.getenv("GTARE_LOG_LEVEL", "WARNING").upper()
        level = getattr(logging, name, None)
        if not isinstance(level, int):
            level = logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def emit(payload: Dict[str, Any]) -> None:
    print(json.dumps(payload, indent=2))


def error_payload(err: GtareError) -> Dict[str, Any]:
    return {"status": "error", "error": err.name, "message": str(err)}


def _parse_vector(text: str) -> List[float]:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from err


def cmd_solve(args: argparse.Namespace) -> int:
    problem, L = load_problem(args.problem, strict=not args.lax)
    if args.certificate:
        L = load_certificate(args.certificate, problem)
    options = SolveOptions(
        outer_tol=args.tol,
        max_outer=args.max_outer,
        certificate=L,
        saddle=args.saddle,
    )
    report = solve_gtare(problem, options)

    if args.trace:
        write_csv(args.trace, trace_frame(report.history, problem.n))
    payload = report.to_dict()
    payload["notes"] = report.notes
    if args.out:
        write_json(args.out, payload)
    emit(payload)
    return EXIT_OK


def cmd_residual(args: argparse.Namespace) -> int:
    problem, _ = load_problem(args.problem, strict=not args.lax)
    P = load_solution_matrix(args.solution, problem)
    emit({
        "status": "ok",
        "residual_norm": residual_G(problem, P.array).norm(),
        "in_dom": in_dom_G(problem, P.array),
    })
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    problem, _ = load_problem(args.problem, strict=not args.lax)
    feedback = load_gains(args.solution, problem)
    x0 = np.ones(problem.n) if args.x0 is None else np.asarray(args.x0, dtype=float)
    if x0.shape != (problem.n,):
        raise InvalidSimConfig(f"--x0 needs {problem.n} values, got {x0.shape[0]}")
    cfg = SimConfig(
        x0=x0,
        dt=args.dt,
        horizon=args.horizon,
        paths=args.paths,
        seed=args.seed,
    )
    batch = simulate(problem, feedback, cfg)
    if args.out:
        write_csv(args.out, trajectory_frame(batch, args.stride))

    mean, stderr = estimate_cost(problem, batch)
    payload: Dict[str, Any] = {
        "status": "ok",
        "paths": cfg.paths,
        "steps": cfg.steps,
        "seed": cfg.seed,
        "cost_mean": mean,
        "cost_stderr": stderr,
        "abscissa": batch.abscissa,
    }
    if batch.abscissa < -get_tolerances().stab_tol:
        payload["value_check"] = value_check(problem, feedback, batch).to_dict()
    emit(payload)
    return EXIT_OK


def cmd_certificate(args: argparse.Namespace) -> int:
    problem, L = load_problem(args.problem, strict=not args.lax)
    if args.certificate:
        L = load_certificate(args.certificate, problem)
    elif L is None:
        L = np.zeros((problem.m2, problem.n))
        logger.info("No certificate given; checking L = 0")
    report = check_certificate(problem, L)
    emit({"status": "ok" if report.admissible else "rejected", **report.to_dict()})
    return EXIT_OK if report.admissible else EXIT_CERTIFICATE_REJECTED


def cmd_validate(args: argparse.Namespace) -> int:
    problem, _ = load_problem(args.problem, strict=not args.lax, check=False)
    diagnostics = validate(problem)
    emit({"status": "ok" if not diagnostics else "invalid", "diagnostics": diagnostics})
    return EXIT_OK if not diagnostics else EXIT_INPUT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gtare",
        description="Stochastic game-theoretic algebraic Riccati equation solver",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logging")
    parser.add_argument("--lax", action="store_true", help="warn about unknown problem fields instead of failing")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="compute the stabilizing solution P*")
    solve.add_argument("problem")
    solve.add_argument("--tol", type=float, default=None, help="outer stopping tolerance")
    solve.add_argument("--max-outer", type=int, default=None, dest="max_outer")
    solve.add_argument("--trace", help="write the per-iteration trace CSV here")
    solve.add_argument("--certificate", help="JSON file with a certificate gain L")
    solve.add_argument("--out", help="write the solve report JSON here")
    solve.add_argument("--saddle", action="store_true", help="check the saddle inequalities at P*")
    solve.set_defaults(handler=cmd_solve)

    residual = sub.add_parser("residual", help="evaluate |G(P)| for a given P")
    residual.add_argument("problem")
    residual.add_argument("solution", help="JSON file with P or P_star")
    residual.set_defaults(handler=cmd_residual)

    sim = sub.add_parser("simulate", help="Monte Carlo of the closed loop")
    sim.add_argument("problem")
    sim.add_argument("solution", help="JSON file with P/P_star or K1/K2")
    sim.add_argument("--x0", type=_parse_vector, default=None, help="initial state, comma separated (default all ones)")
    sim.add_argument("--dt", type=float, default=1e-3)
    sim.add_argument("--horizon", type=float, default=10.0)
    sim.add_argument("--paths", type=int, default=1000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", help="write the trajectory CSV here")
    sim.add_argument("--stride", type=int, default=1, help="keep every stride-th time step in the CSV")
    sim.set_defaults(handler=cmd_simulate)

    cert = sub.add_parser("certificate", help="check a certificate gain L")
    cert.add_argument("problem")
    cert.add_argument("certificate", nargs="?", help="JSON file with L (default: L in the problem file, else 0)")
    cert.set_defaults(handler=cmd_certificate)

    check = sub.add_parser("validate", help="print problem diagnostics")
    check.add_argument("problem")
    check.set_defaults(handler=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.handler(args)
    except GtareError as err:
        logger.error(f"{args.command} failed: {err.name}: {err}")
        emit(error_payload(err))
        return err.exit_code
    except Exception as err:
        logger.exception(f"{args.command} failed unexpectedly")
        emit({"status": "error", "error": type(err).__name__, "message": str(err)})
        return EXIT_SOLVER
