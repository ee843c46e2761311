"""Command-line entry point.

Subcommands: run, check, certify, counterexample, pep-export, pep-bound,
report.  Exit code 0 on all-pass, 1 on a failed check or violated
certificate where a pass was requested, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__, certify, harness, pep
from .errors import VicertError
from .operators import (
    LogisticGrad,
    load_operator,
    rotation,
    scaled_identity,
)
from .solvers import SolverConfig, run


def _parse_vector(text: str) -> np.ndarray:
    return np.array([float(tok) for tok in text.split(",") if tok.strip() != ""])


def _parse_matrix(text: str) -> np.ndarray:
    return np.array(json.loads(text), dtype=float)


_BUILTIN_OPS = {
    "rotation": rotation,
    "identity2": lambda: scaled_identity(1.0, 2),
    "identity3": lambda: scaled_identity(1.0, 3),
    "logistic": lambda: LogisticGrad(1.0, 0.01),
}


def _load_op(ref: str):
    if ref in _BUILTIN_OPS:
        return _BUILTIN_OPS[ref]()
    return load_operator(ref)


def _write_out(payload: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vicert",
                                description="variational-inequality solver and certificate toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run a solver and write the trace CSV")
    runp.add_argument("--op", required=True, help="operator JSON file or builtin name")
    runp.add_argument("--method", required=True,
                      choices=["gd", "pp", "eg", "eg2", "og", "eftp", "hgm"])
    runp.add_argument("--gamma", type=float, default=0.0)
    runp.add_argument("--gamma1", type=float)
    runp.add_argument("--gamma2", type=float)
    runp.add_argument("--iters", type=int, required=True)
    runp.add_argument("--x0", required=True, help="comma-separated start point")
    runp.add_argument("--xstar", help="comma-separated solution point")
    runp.add_argument("--out")

    chk = sub.add_parser("check", help="evaluate a convergence bound on a run")
    chk.add_argument("--theorem", required=True,
                     choices=["gd", "pp", "eg-random", "eg-last", "eftp", "hgm",
                              "hgm-affine"])
    chk.add_argument("--op", required=True)
    chk.add_argument("--gamma", type=float)
    chk.add_argument("--gamma1", type=float)
    chk.add_argument("--gamma2", type=float)
    chk.add_argument("--ell", type=float)
    chk.add_argument("--L", type=float, dest="lipschitz")
    chk.add_argument("--Lambda", type=float, dest="jac_lipschitz")
    chk.add_argument("--iters", type=int, required=True)
    chk.add_argument("--x0", help="start point; defaults to the all-ones vector")
    chk.add_argument("--xstar", help="solution point; defaults to the stored root")
    chk.add_argument("--out")

    cert = sub.add_parser("certify", help="run a cocoercivity certificate")
    cert.add_argument("--check", required=True,
                      choices=["cocoercive-exact", "spectral-disk", "min-ell",
                               "eg-affine", "og-witness", "eftp-witness",
                               "star-equiv", "sampled"])
    cert.add_argument("--A", help="matrix as a JSON array of rows")
    cert.add_argument("--op", help="operator JSON file or builtin (sampled check)")
    cert.add_argument("--ell", type=float)
    cert.add_argument("--L", type=float, dest="lipschitz")
    cert.add_argument("--gamma", type=float)
    cert.add_argument("--class", dest="op_class", default="monotone")
    cert.add_argument("--trials", type=int, default=200)
    cert.add_argument("--seed", type=int, default=0)
    cert.add_argument("--expect", choices=["holds", "violated"],
                      help="exit 1 unless the verdict matches")
    cert.add_argument("--out")

    ce = sub.add_parser("counterexample",
                        help="build and verify the expansive four-point system")
    ce.add_argument("--ell", type=float, required=True)
    ce.add_argument("--gamma1", type=float, required=True)
    ce.add_argument("--gamma2", type=float, required=True)
    ce.add_argument("--scale", type=float, default=1.0)
    ce.add_argument("--out")

    pexp = sub.add_parser("pep-export", help="write an SDPA sparse file")
    _pep_problem_flags(pexp)
    pexp.add_argument("--out", required=True)

    pbnd = sub.add_parser("pep-bound",
                          help="search a feasible Gram point (certified lower bound)")
    _pep_problem_flags(pbnd)
    pbnd.add_argument("--rank", type=int, default=6)
    pbnd.add_argument("--restarts", type=int, default=32)
    pbnd.add_argument("--steps", type=int, default=5000)
    pbnd.add_argument("--rounds", type=int, default=5)
    pbnd.add_argument("--seed", type=int, default=0)
    pbnd.add_argument("--out")

    rep = sub.add_parser("report", help="run the full bound-check battery")
    rep.add_argument("--seed", type=int, default=20240406)
    rep.add_argument("--iters", type=int, default=300)
    rep.add_argument("--out")
    return p


def _pep_problem_flags(sp) -> None:
    sp.add_argument("--problem", required=True,
                    choices=["expansiveness", "norm", "delta"])
    sp.add_argument("--ell", type=float)
    sp.add_argument("--L", type=float, dest="lipschitz")
    sp.add_argument("--gamma1", type=float, required=True)
    sp.add_argument("--gamma2", type=float, required=True)
    sp.add_argument("--K", type=int, default=1)
    sp.add_argument("--operator-class", default="monotone-lipschitz",
                    choices=["monotone-lipschitz", "cocoercive"])


def _build_problem(args) -> pep.GramProblem:
    if args.problem == "expansiveness":
        if args.ell is None:
            raise VicertError("--ell is required for the expansiveness problem")
        return pep.build_expansiveness_matrices(args.ell, args.gamma1, args.gamma2)
    L = args.lipschitz
    if L is None:
        raise VicertError("--L is required for the norm problems")
    if args.problem == "norm":
        return pep.build_norm_pep(L, args.gamma1, args.gamma2, args.K,
                                  operator_class=args.operator_class)
    return pep.build_delta_pep(L, args.gamma1, args.gamma2,
                               operator_class=args.operator_class)


def _cmd_run(args) -> int:
    op = _load_op(args.op)
    cfg = SolverConfig(args.method, gamma=args.gamma or 0.0, iters=args.iters,
                       x0=_parse_vector(args.x0), gamma1=args.gamma1,
                       gamma2=args.gamma2)
    x_star = _parse_vector(args.xstar) if args.xstar else None
    trace = run(op, cfg, x_star=x_star)
    _write_out(trace.to_csv(), args.out)
    return 0


def _cmd_check(args) -> int:
    op = _load_op(args.op)
    x0 = _parse_vector(args.x0) if args.x0 else np.ones(op.dim)
    star = _parse_vector(args.xstar) if args.xstar else None
    L = args.lipschitz if args.lipschitz is not None else op.constants.lipschitz
    if args.theorem == "gd":
        checks = list(harness.check_gd_bounds(op, args.ell, args.gamma,
                                              args.iters, x0, star))
    elif args.theorem == "pp":
        checks = [harness.check_pp_bound(op, args.ell, args.gamma, args.iters,
                                         x0, star)]
    elif args.theorem == "eg-random":
        checks = [harness.check_eg_random_bound(op, L, args.gamma1, args.gamma2,
                                                args.iters, x0, star)]
    elif args.theorem == "eg-last":
        checks = list(harness.check_eg_last_bounds(op, L, args.gamma, args.iters,
                                                   x0, star))
    elif args.theorem == "eftp":
        checks = [harness.check_eftp_bound(op, L, args.gamma, args.iters, x0, star)]
    elif args.theorem == "hgm":
        lam = args.jac_lipschitz
        if lam is None:
            lam = op.constants.jac_lipschitz
        if lam is None:
            raise VicertError("--Lambda is required for the hgm check")
        checks = list(harness.check_hgm_bounds(op, L, lam, args.gamma,
                                               args.iters, x0))
    else:
        checks = [harness.check_hgm_affine_contraction(op, args.iters, x0)]
    payload = json.dumps({"checks": [c.to_json() for c in checks]},
                         sort_keys=True, indent=2) + "\n"
    _write_out(payload, args.out)
    return 0 if all(c.passed is not False for c in checks) else 1


def _cmd_certify(args) -> int:
    if args.check == "sampled":
        if args.op is None:
            raise VicertError("--op is required for the sampled check")
        op = _load_op(args.op)
        report = certify.sampled_property_check(op, args.op_class,
                                                trials=args.trials,
                                                seed=args.seed,
                                                parameter=args.ell)
    else:
        if args.A is None:
            raise VicertError("--A is required for matrix certificates")
        A = _parse_matrix(args.A)
        if args.check == "cocoercive-exact":
            report = certify.affine_cocoercivity_exact(A, args.ell)
        elif args.check == "spectral-disk":
            report = certify.spectral_disk_check(A, args.ell)
        elif args.check == "min-ell":
            ell = certify.min_cocoercivity_ell(A)
            payload = json.dumps({"min_ell": ell}, sort_keys=True) + "\n"
            _write_out(payload, args.out)
            return 0
        elif args.check == "eg-affine":
            report = certify.eg_affine_cocoercivity_check(A, args.gamma,
                                                          args.lipschitz)
        elif args.check == "star-equiv":
            report = certify.linear_star_equiv_check(A, args.ell,
                                                     trials=args.trials,
                                                     seed=args.seed)
        else:
            which = "og" if args.check == "og-witness" else "eftp"
            report = certify.og_noncocoercivity_witness(A, args.ell, args.gamma,
                                                        which)
    payload = json.dumps(report.to_json(), sort_keys=True, indent=2) + "\n"
    _write_out(payload, args.out)
    if args.expect is not None:
        return 0 if report.verdict == args.expect else 1
    return 0


def _cmd_counterexample(args) -> int:
    inst = certify.build_counterexample(args.ell, args.gamma1, scale=args.scale)
    report = certify.verify_counterexample(inst, args.gamma2)
    payload = json.dumps(
        {"instance": inst.to_json(), "report": report.to_json()},
        sort_keys=True, indent=2) + "\n"
    _write_out(payload, args.out)
    return 0 if report.verdict == "violated" else 1


def _cmd_pep_export(args) -> int:
    prob = _build_problem(args)
    pep.export_sdpa(prob, args.out)
    sidecar = args.out + ".json"
    with open(sidecar, "w") as fh:
        json.dump({"name": prob.name, "basis": list(prob.basis),
                   "metadata": prob.metadata,
                   "inequalities": [name for name, _, _ in prob.inequalities],
                   "equalities": [name for name, _, _ in prob.equalities]},
                  fh, sort_keys=True, indent=2)
        fh.write("\n")
    return 0


def _cmd_pep_bound(args) -> int:
    prob = _build_problem(args)
    point = pep.lower_bound_search(prob, rank=args.rank, restarts=args.restarts,
                                   ascent_steps=args.steps, rounds=args.rounds,
                                   seed=args.seed)
    payload = json.dumps({"problem": prob.name, "metadata": _meta(prob),
                          "lower_bound": point.objective,
                          "point": point.to_json()}, sort_keys=True, indent=2) + "\n"
    _write_out(payload, args.out)
    return 0


def _meta(prob) -> dict:
    return {k: v for k, v in prob.metadata.items() if not isinstance(v, np.ndarray)}


def _cmd_report(args) -> int:
    report = harness.run_report(seed=args.seed, iters=args.iters)
    _write_out(harness.report_to_json(report), args.out)
    return 0 if report["all_pass"] else 1


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)
    handlers = {
        "run": _cmd_run,
        "check": _cmd_check,
        "certify": _cmd_certify,
        "counterexample": _cmd_counterexample,
        "pep-export": _cmd_pep_export,
        "pep-bound": _cmd_pep_bound,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except VicertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())
