"""Command line interface: ``entcert {check,verify,epsilon,solve}``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .constraints import ConstraintError, DegenerateDualError, IncompatibleConstraints, parse_constraints
from .driver import ENTANGLED, SEPARABLE_COMPATIBLE, RunConfig, run_detection
from .inner import epsilon_N
from .report import emit_report, verify_command
from .sdp import OPTIMAL, NumericalFailure, SdpOptions, check_feasibility, load_problem, solve, verify_solution
from .serialize import FormatError, read_json
from .witness import CertificateInconsistency, FamilyEmpty

EXIT_ERROR = 3
EXIT_VERIFY_FAILED = 4


def _tol_args(p):
    p.add_argument("--tol-feas", type=float, default=1e-8, help="primal/dual residual tolerance")
    p.add_argument("--tol-gap", type=float, default=1e-7, help="duality gap tolerance")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="entcert", description="Entanglement certification from partial information")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="run the detection pipeline on a constraint file")
    c.add_argument("--input", required=True, help="constraint file (JSON)")
    c.add_argument("--max-outer", type=int, default=3)
    c.add_argument("--max-inner", type=int, default=8)
    c.add_argument("--report", help="write the JSON report here")
    c.add_argument("--seed", type=int, default=0, help="seed for product-state sampling")
    c.add_argument("--samples", type=int, default=10_000)
    _tol_args(c)

    v = sub.add_parser("verify", help="re-verify a report or witness file")
    v.add_argument("--input", required=True, help="report, witness or certificate JSON")
    v.add_argument("--constraints", help="constraint file (defaults to the one embedded in the report)")
    v.add_argument("--seed", type=int, default=0)
    _tol_args(v)

    e = sub.add_parser("epsilon", help="print the eps_N table")
    e.add_argument("--max-n", type=int, default=12)
    e.add_argument("--d-b", type=int, nargs="+", default=[2, 3, 4])

    s = sub.add_parser("solve", help="run the SDP solver on a debug dump")
    s.add_argument("--input", required=True)
    _tol_args(s)
    return ap


def _cmd_check(args) -> int:
    cs = parse_constraints(args.input)
    cfg = RunConfig(max_outer_level=args.max_outer, max_inner_level=args.max_inner, gap_tol=args.tol_gap,
                    feas_tol=args.tol_feas, sample_count=args.samples, report_path=args.report, seed=args.seed)
    v = run_detection(cs, cfg)
    emit_report(v, cfg)
    print(f"verdict: {v.kind}")
    if v.kind == ENTANGLED:
        b = v.bounds
        print(f"level k = {v.level}, t_opt = {b.t_opt:.6g}, witness margin = {v.witness.margin:.6g}")
        print(f"random robustness >= {b.random_robustness_lb:.6g}, BSA >= {b.bsa_lb:.6g}")
        for n, m, val in b.e_nm_entries:
            print(f"E_{{{n:g},{m:g}}} >= {val:.6g}")
    elif v.kind == SEPARABLE_COMPATIBLE:
        c = v.certificate
        print(f"inner level N = {c.N}, eps_N = {c.epsilon:.6g}, residual = {c.residual:.2e}")
    else:
        print(f"exhausted k <= {v.max_k}, N <= {v.max_N}; boundary flags: {len(v.boundary_flags)}")
    if args.report:
        print(f"report written to {args.report}")
    return v.exit_code


def _cmd_verify(args) -> int:
    opts = SdpOptions(feas_tol=args.tol_feas, gap_tol=args.tol_gap)
    rep = verify_command(args.input, args.constraints, opts, seed=args.seed)
    for line in rep.lines():
        print(line)
    print("PASS" if rep.passed else "FAIL")
    return 0 if rep.passed else EXIT_VERIFY_FAILED


def _cmd_epsilon(args) -> int:
    cols = [f"d_B={d}" for d in args.d_b]
    print("N".rjust(3) + "".join(c.rjust(16) for c in cols))
    for N in range(1, args.max_n + 1):
        print(f"{N:3d}" + "".join(f"{epsilon_N(N, d):16.12f}" for d in args.d_b))
    return 0


def _cmd_solve(args) -> int:
    opts = SdpOptions(feas_tol=args.tol_feas, gap_tol=args.tol_gap)
    prob, soft = load_problem(read_json(args.input))
    if soft is not None or not np.any(prob.c):
        res = check_feasibility(prob, soft, opts)
        print(f"min-t: t_opt = {res.t_opt:.6g} -> {res.verdict}")
        rep = verify_solution(prob, res, opts)
    else:
        sol = solve(prob, opts)
        print(f"status {sol.status} after {sol.iterations} iterations, objective {sol.primal_obj:.10g}")
        if sol.status != OPTIMAL:
            return EXIT_ERROR
        rep = verify_solution(prob, sol, opts)
    for line in rep.lines():
        print(line)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handlers = {"check": _cmd_check, "verify": _cmd_verify, "epsilon": _cmd_epsilon, "solve": _cmd_solve}
    try:
        return handlers[args.command](args)
    except FamilyEmpty as exc:
        print(f"error: constraints admit no state: {exc}", file=sys.stderr)
    except (ConstraintError, IncompatibleConstraints, DegenerateDualError, FormatError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
    except (NumericalFailure, CertificateInconsistency) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
