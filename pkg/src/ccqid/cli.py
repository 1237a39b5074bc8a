"""Command-line entry point ``ccqid``.

Exit codes: 0 success, 1 validation failure, 2 parameter error,
3 internal numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import io as ccq_io
from .channel import BlockChannel, CcqChannel, block_channel
from .codes import (
    DeterministicCode,
    IdCode,
    SimultaneousIdCode,
    StochasticTransmissionCode,
    avg_error,
    id_error_first,
    id_error_second,
    max_error,
    verify_simultaneous,
)
from .construction import (
    build_subset_family,
    construct_sim_id_code,
    derandomize_literal,
    derandomize_pointmass,
    lober_bound_log2,
    lober_condition,
)
from .errors import CcqError, ParameterError
from .harness import ExperimentConfig, StageError, generate_random_code, run_experiment, write_outputs
from .linalg import DEFAULT_TOL, check_density, validate_povm

EXIT_OK, EXIT_VALIDATION, EXIT_PARAMETER, EXIT_NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("ccqid")


class _Out:
    def __init__(self, args):
        self.as_json = args.json
        self.quiet = args.quiet

    def emit(self, result: dict):
        if self.quiet:
            return
        if self.as_json:
            print(json.dumps(result, indent=2, sort_keys=True))
            return
        for key, value in result.items():
            if isinstance(value, float):
                value = f"{value:.12g}"
            elif isinstance(value, (dict, list)):
                value = json.dumps(value)
            print(f"{key}: {value}")


def _load_channel(path, k=None):
    return block_channel(ccq_io.channel_from_json(ccq_io.load_json(path)), k)


# -- subcommands ----------------------------------------------------------------

def cmd_validate(args, out: _Out) -> int:
    d = ccq_io.load_json(args.file)
    tol = args.tol
    result: dict = {"file": args.file}
    if isinstance(d, list):
        rep = validate_povm([ccq_io.matrix_from_json(m) for m in d], tol)
        result.update(kind="povm", **rep.to_dict())
    elif "rows" in d and "data" in d:
        rep = check_density(ccq_io.matrix_from_json(d), tol)
        result.update(kind="density", **rep.to_dict())
    elif "subsets" in d:
        fam = ccq_io.family_from_json(d)
        result.update(kind="family", passed=True, size=len(fam), max_intersection=fam.max_intersection())
    elif "decoder" in d or "effects" in d:
        code = ccq_io.code_from_json(d, tol=tol)
        result.update(kind=type(code).__name__, passed=True)
        if isinstance(code, SimultaneousIdCode):
            rep = verify_simultaneous(code, tol=tol)
            result.update(passed=rep.passed, simultaneity=rep.to_dict())
    elif "kind" in d:
        ch = ccq_io.channel_from_json(d)
        result.update(kind="channel", passed=True, nx=ch.nx, ny=ch.ny, dim=ch.dim)
    else:
        raise ParameterError("unrecognized file contents")
    out.emit(result)
    return EXIT_OK if result["passed"] else EXIT_VALIDATION


def _errors_for(code, ch) -> dict:
    if isinstance(code, SimultaneousIdCode):
        res = _errors_for(code.id_code, ch)
        res["simultaneity"] = verify_simultaneous(code).to_dict()
        return res
    if isinstance(code, IdCode):
        res = {"e1": id_error_first(code, ch).to_dict()}
        if code.M * code.N >= 2:
            res["e2"] = id_error_second(code, ch).to_dict()
        return res
    return {"e": max_error(code, ch).to_dict(), "e_avg": avg_error(code, ch).to_dict()}


def cmd_eval_error(args, out: _Out) -> int:
    code = ccq_io.code_from_json(ccq_io.load_json(args.code), tol=args.tol)
    k = code.id_code.k if isinstance(code, SimultaneousIdCode) else code.k
    ch = _load_channel(args.channel, k)
    result = {"code": args.code, "channel": args.channel, **_errors_for(code, ch)}
    out.emit(result)
    sim = result.get("simultaneity")
    return EXIT_VALIDATION if sim is not None and not sim["passed"] else EXIT_OK


def cmd_build_family(args, out: _Out) -> int:
    fam = build_subset_family(args.M, args.lam, args.epsilon, args.target, args.seed)
    try:
        cond = lober_condition(args.lam, args.epsilon)
    except ParameterError:
        cond = None
    report = {
        "count": len(fam),
        "weight": fam.weight,
        "cap": fam.cap,
        "mode": fam.mode,
        "seed": args.seed,
        "target": args.target,
        "shortfall": fam.shortfall,
        "lober_condition": cond,
        "bound_log2": lober_bound_log2(args.M, args.lam),
        "log2_count": float(np.log2(len(fam))),
    }
    if args.out:
        ccq_io.dump_json({**ccq_io.family_to_json(fam), "report": report}, args.out)
    out.emit(report)
    return EXIT_OK


def cmd_build_id_code(args, out: _Out) -> int:
    code = ccq_io.code_from_json(ccq_io.load_json(args.code), tol=args.tol)
    if isinstance(code, DeterministicCode):
        code = derandomize_pointmass(code)
    if not isinstance(code, StochasticTransmissionCode):
        raise ParameterError("build-id-code needs a transmission code")
    fam_a = ccq_io.family_from_json(ccq_io.load_json(args.family_a))
    fam_b = ccq_io.family_from_json(ccq_io.load_json(args.family_b))
    sim = construct_sim_id_code(code, fam_a, fam_b)
    rep = verify_simultaneous(sim, tol=max(args.tol, 1e-8))
    if args.out:
        ccq_io.dump_json(ccq_io.code_to_json(sim), args.out)
    out.emit({"M_prime": sim.id_code.M, "N_prime": sim.id_code.N, "simultaneity": rep.to_dict()})
    return EXIT_OK if rep.passed else EXIT_VALIDATION


def cmd_derandomize(args, out: _Out) -> int:
    code = ccq_io.code_from_json(ccq_io.load_json(args.code), tol=args.tol)
    if not isinstance(code, DeterministicCode):
        raise ParameterError("derandomize needs a deterministic code (codewords_x / codewords_y)")
    new = derandomize_literal(code) if args.mode == "literal" else derandomize_pointmass(code)
    if args.out:
        ccq_io.dump_json(ccq_io.code_to_json(new), args.out)
    result: dict = {"mode": args.mode, "M": new.M, "N": new.N}
    if args.channel:
        ch = _load_channel(args.channel, code.k)
        result.update(
            e_source=max_error(code, ch).value,
            e_avg_source=avg_error(code, ch).value,
            e_derandomized=max_error(new, ch).value,
            e_avg_derandomized=avg_error(new, ch).value,
        )
    out.emit(result)
    return EXIT_OK


def cmd_random_code(args, out: _Out) -> int:
    base = ccq_io.channel_from_json(ccq_io.load_json(args.channel))
    if isinstance(base, BlockChannel) and args.k != base.k:
        raise ParameterError(f"explicit channel has k={base.k}, --k {args.k} requested")
    ch = block_channel(base, args.k) if isinstance(base, CcqChannel) else base
    code = generate_random_code(ch, args.M, args.N, args.seed, args.mode, args.support)
    if args.out:
        ccq_io.dump_json(ccq_io.code_to_json(code), args.out)
    out.emit({"M": code.M, "N": code.N, "k": code.k, "e": max_error(code, ch).value,
              "e_avg": avg_error(code, ch).value})
    return EXIT_OK


def cmd_run(args, out: _Out) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.tol is not None and args.tol != DEFAULT_TOL:
        cfg.tol = args.tol
    report = run_experiment(cfg)
    if args.out_dir:
        write_outputs(report, args.out_dir)
    summary = {
        "status": report["status"],
        "errors": report["errors"],
        "failed_checks": report["failed_checks"],
        "warnings": report["warnings"],
    }
    out.emit(report if args.json else summary)
    return EXIT_OK if report["status"] == "ok" else EXIT_VALIDATION


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="validation tolerance (default 1e-9)")
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="machine-readable output")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help="no output on success")

    p = argparse.ArgumentParser(prog="ccqid", parents=[common],
                                description="CCQ multiple-access channel code and identification-code toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="validate a matrix, POVM, channel, code or family file")
    s.add_argument("file", help="JSON file: matrix, list of matrices, channel, code or family")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("eval-error", parents=[common], help="exact error figures of a code on a channel")
    s.add_argument("--code", required=True, help="code JSON file")
    s.add_argument("--channel", required=True, help="channel JSON file")
    s.set_defaults(func=cmd_eval_error)

    s = sub.add_parser("build-family", parents=[common], help="constant-weight subset family")
    s.add_argument("--M", type=int, required=True, help="ground set size")
    s.add_argument("--lambda", dest="lam", type=float, required=True,
                   help="weight fraction; subsets have floor(lambda*M) elements")
    s.add_argument("--epsilon", type=float, required=True,
                   help="intersection fraction; overlaps are at most epsilon*weight")
    s.add_argument("--target", type=int, required=True, help="stop after this many subsets")
    s.add_argument("--seed", type=int, required=True, help="RNG seed for the randomized mode")
    s.add_argument("--out", help="write the family JSON here")
    s.set_defaults(func=cmd_build_family)

    s = sub.add_parser("build-id-code", parents=[common], help="simultaneous ID code from a transmission code")
    s.add_argument("--code", required=True, help="transmission code JSON file")
    s.add_argument("--family-a", required=True, help="family over the first sender's messages")
    s.add_argument("--family-b", required=True, help="family over the second sender's messages")
    s.add_argument("--out", help="write the simultaneous ID code JSON here")
    s.set_defaults(func=cmd_build_id_code)

    s = sub.add_parser("derandomize", parents=[common], help="deterministic code -> stochastic code")
    s.add_argument("--code", required=True, help="deterministic code JSON file")
    s.add_argument("--mode", choices=["literal", "pointmass"], required=True)
    s.add_argument("--channel", help="also report errors of both codes on this channel")
    s.add_argument("--out", help="write the stochastic code JSON here")
    s.set_defaults(func=cmd_derandomize)

    s = sub.add_parser("random-code", parents=[common], help="seeded random code with square-root decoder")
    s.add_argument("--channel", required=True, help="channel JSON file")
    s.add_argument("--M", type=int, required=True, help="messages of the first sender")
    s.add_argument("--N", type=int, required=True, help="messages of the second sender")
    s.add_argument("--k", type=int, required=True, help="block length")
    s.add_argument("--seed", type=int, required=True, help="RNG seed")
    s.add_argument("--mode", choices=["pointmass", "stochastic"], default="pointmass",
                   help="point-mass or random stochastic encoders")
    s.add_argument("--support", type=int, default=2, help="support size in stochastic mode")
    s.add_argument("--out", help="write the code JSON here")
    s.set_defaults(func=cmd_random_code)

    s = sub.add_parser("run", parents=[common], help="run a full experiment from a JSON config")
    s.add_argument("--config", required=True, help="experiment config JSON file")
    s.add_argument("--out-dir", help="write report.json and summary.csv here")
    s.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (("tol", DEFAULT_TOL), ("json", False), ("quiet", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = _Out(args)
    try:
        return args.func(args, out)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except CcqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
