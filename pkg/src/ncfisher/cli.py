"""Batch front door: model ingestion, command dispatch, JSON reports.

Reports go to stdout as JSON (sorted keys, lossless float round-trip);
a one-line human summary goes to stderr.  Exit codes: 0 when every
asserted check passed, 1 on an assertion failure, 2 on configuration or
usage errors.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
import time
from dataclasses import asdict, is_dataclass
from fractions import Fraction

import numpy as np

from .algebra import NcPoly, Word, Y_FAMILY, word_str, x, y
from .brownian import expand_state, verify_gradient_expansion
from .conjugate import (
    BasisSpec,
    chi_star,
    cramer_rao_audit,
    fisher_multi,
    modular_covariance_check,
    self_adjoint_defect,
    solve_conjugate,
)
from .core_cp import factoriality_bound, verify_core_identity
from .derivation import verify_insertion_identity
from .model import (
    ConfigError,
    DetailedBalanceViolation,
    ModelSpec,
    check_kms,
    load_model,
    two_atom_model,
)
from .moments import (
    brute_force_oracle,
    evaluate_state_detailed,
    ORACLE_MAX_LETTERS,
)
from .sampling import random_core_word, random_word
from .suite import run_suite

__all__ = ["build_parser", "run", "main"]

_WORD_TOKEN = re.compile(r"^([XY])([A-Za-z0-9_]*):(-?[0-9./]+)$")


def _model_digest(m: ModelSpec) -> str:
    blob = json.dumps(m.config_dict(), sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _resolve_gen(m: ModelSpec, name: str) -> str:
    if name == "":
        return m.sole_generator().gen_id
    return m.gen(name).gen_id


def parse_word(m: ModelSpec, text: str, allow_y: bool = False) -> Word:
    """Parse space-separated ``<family><gen>:<time>`` tokens.

    The family is the leading X or Y; an empty generator id refers to the
    model's sole generator; times are exact rationals such as ``3/2``.
    """
    letters = []
    for token in text.split():
        match = _WORD_TOKEN.match(token)
        if match is None:
            raise ConfigError(f"cannot parse word token {token!r}")
        family, gen_name, time_text = match.groups()
        try:
            t = Fraction(time_text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad time in token {token!r}: {exc}") from None
        gen = _resolve_gen(m, gen_name)
        if family == Y_FAMILY:
            if not allow_y:
                raise ConfigError(
                    "partner-family letters are accepted only by `moment`"
                )
            letters.append(y(gen, t))
        else:
            letters.append(x(gen, t))
    return tuple(letters)


def _parse_rationals(text: str) -> tuple:
    try:
        return tuple(Fraction(tok) for tok in text.split(",") if tok.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad rational list {text!r}: {exc}") from None


def _parse_floats(text: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}: {exc}") from None


def _jsonify(obj):
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        return obj
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return _jsonify(obj.item())
    if is_dataclass(obj) and not isinstance(obj, type):
        return _jsonify(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set)):
        return [_jsonify(v) for v in obj]
    return str(obj)


def _basis_from_args(args) -> BasisSpec:
    return BasisSpec(_parse_rationals(args.grid), args.degree)


def _gens_from_args(m: ModelSpec, args) -> list:
    if getattr(args, "gens", None):
        return [_resolve_gen(m, g.strip()) for g in args.gens.split(",")]
    return list(m.gen_ids())


# ----------------------------------------------------------------------
# subcommand handlers: each returns (outputs dict, passed flag or None)
# ----------------------------------------------------------------------


def _cmd_check_kms(m, args):
    if args.grid:
        grid = _parse_floats(args.grid)
    else:
        grid = [-5.0 + 0.1 * k for k in range(101)]
    reports = []
    worst = 0.0
    ok = True
    for g in m.generators:
        try:
            rep = check_kms(g, grid)
        except DetailedBalanceViolation as exc:
            reports.append({"gen": g.gen_id, "detailed_balance_ok": False,
                            "error": str(exc)})
            ok = False
            continue
        reports.append(
            {
                "gen": rep.gen_id,
                "detailed_balance_ok": rep.detailed_balance_ok,
                "max_deviation": rep.max_deviation,
            }
        )
        worst = max(worst, rep.max_deviation)
        ok = ok and rep.max_deviation < args.tol
    return {"generators": reports, "max_deviation": worst,
            "grid_points": len(grid)}, ok


def _cmd_moment(m, args):
    w = parse_word(m, args.word, allow_y=True)
    detail = evaluate_state_detailed(m, w)
    out = {
        "word": word_str(w),
        "value": detail.value,
        "partition_count": detail.partition_count,
    }
    if len(w) <= ORACLE_MAX_LETTERS:
        oracle = brute_force_oracle(m, w)
        out["oracle_value"] = oracle
        out["oracle_diff"] = abs(detail.value - oracle)
    return out, None


def _cmd_conjugate(m, args):
    target = _resolve_gen(m, args.target)
    b_gens = tuple(
        _resolve_gen(m, g.strip()) for g in args.b_gens.split(",") if g.strip()
    )
    sol = solve_conjugate(
        m,
        target,
        _basis_from_args(args),
        b_gens=b_gens,
        target_time=Fraction(args.time),
    )
    defect = self_adjoint_defect(m, sol)
    out = {
        "target": target,
        "target_time": sol.target_time,
        "basis_size": len(sol.basis_words),
        "kept_size": len(sol.kept),
        "coefficients": [
            {"word": word_str(w), "re": c.real, "im": c.imag}
            for w, c in sol.coefficient_map().items()
        ],
        "residual": sol.residual,
        "xi_norm_sq": sol.xi_norm_sq,
        "phi_star": sol.phi_star,
        "gram_condition": sol.gram_condition,
        "self_adjoint_defect": defect,
    }
    return out, defect < args.tol


def _cmd_fisher(m, args):
    gens = _gens_from_args(m, args)
    basis = _basis_from_args(args)
    per_gen = {}
    for g in gens:
        others = tuple(h for h in gens if h != g)
        per_gen[g] = solve_conjugate(m, g, basis, b_gens=others).phi_star
    total = fisher_multi(m, gens, basis)
    return {"gens": gens, "per_gen": per_gen, "phi_star_total": total}, None


def _cmd_cramer_rao(m, args):
    gens = _gens_from_args(m, args)
    rep = cramer_rao_audit(m, gens, _basis_from_args(args))
    out = {
        "n": rep.n,
        "lhs": rep.lhs,
        "rhs": rep.rhs,
        "ratio": rep.ratio,
        "second_moment": rep.second_moment,
        "phi_star_tuple": rep.phi_star_tuple,
        "normalized": rep.normalized,
        "asserted": rep.asserted,
        "note": rep.note,
    }
    passed = abs(rep.lhs - rep.rhs) < 1e-7 if rep.asserted else None
    return out, passed


def _cmd_chi_star(m, args):
    gens = _gens_from_args(m, args)
    eps = _parse_floats(args.eps)
    value = chi_star(m, gens, eps, args.tail_cutoff, _basis_from_args(args))
    return {
        "gens": gens,
        "eps_grid": eps,
        "tail_cutoff": args.tail_cutoff,
        "value": value,
    }, None


def _cmd_verify_lemma2(m, args):
    import random

    target = _resolve_gen(m, args.target)
    rng = random.Random(args.seed)
    xi = NcPoly.letter(x(target, 0))
    worst = 0.0
    for _ in range(args.count):
        p = NcPoly.word(random_word(rng, [target], args.degree))
        q = NcPoly.word(random_word(rng, [target], args.degree))
        worst = max(worst, verify_insertion_identity(m, target, p, q, xi))
    return {"max_residual": worst, "count": args.count,
            "degree": args.degree}, worst < args.tol


def _cmd_verify_core(m, args):
    import random

    target = _resolve_gen(m, args.target)
    rng = random.Random(args.seed)
    zeta = NcPoly.letter(x(target, 0))
    worst = 0.0
    for _ in range(args.count):
        q = random_core_word(rng, [target], args.x_degree)
        worst = max(worst, verify_core_identity(m, target, q, zeta))
    return {"max_residual": worst, "count": args.count,
            "x_degree": args.x_degree}, worst < args.tol


def _cmd_brownian(m, args):
    w = parse_word(m, args.word, allow_y=False)
    if not w:
        raise ConfigError("brownian needs a non-empty word")
    target = w[0].gen
    expansion = expand_state(m, w, args.order)
    xi = NcPoly.letter(x(target, 0))
    residual = verify_gradient_expansion(m, w, xi)
    return {
        "word": word_str(w),
        "coefficients": {str(p): c for p, c in
                         sorted(expansion.coefficients.items())},
        "gradient_residual": residual,
    }, residual < args.tol


def _cmd_bound(m, args):
    return {
        "alpha": args.alpha,
        "delta": args.delta,
        "value": factoriality_bound(args.alpha, args.delta),
    }, None


def _cmd_covariance(m, args):
    target = _resolve_gen(m, args.target)
    residual = modular_covariance_check(
        m, target, Fraction(args.shift), _basis_from_args(args)
    )
    return {"target": target, "shift": Fraction(args.shift),
            "residual": residual}, residual < args.tol


def _cmd_suite(m, args):
    results = run_suite(seed=args.seed, jobs=args.jobs)
    ok = all(r.passed for r in results if r.asserted)
    checks = [
        {
            "id": r.cid,
            "description": r.description,
            "passed": r.passed,
            "asserted": r.asserted,
            "details": r.details,
        }
        for r in results
    ]
    return {"checks": checks, "all_passed": ok}, ok


_HANDLERS = {
    "check-kms": _cmd_check_kms,
    "moment": _cmd_moment,
    "conjugate": _cmd_conjugate,
    "fisher": _cmd_fisher,
    "cramer-rao": _cmd_cramer_rao,
    "chi-star": _cmd_chi_star,
    "verify-lemma2": _cmd_verify_lemma2,
    "verify-core": _cmd_verify_core,
    "brownian": _cmd_brownian,
    "bound": _cmd_bound,
    "covariance": _cmd_covariance,
    "suite": _cmd_suite,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="model config JSON; a built-in "
                        "two-atom example is used when omitted")
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)

    parser = argparse.ArgumentParser(
        prog="ncfisher",
        description="moments, conjugate variables and Fisher information "
        "for modular-flow semicircular families",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-kms", parents=[common],
                       help="detailed balance and boundary identity")
    p.add_argument("--grid", help="comma separated real times "
                   "(default: 101 points on [-5, 5])")

    p = sub.add_parser("moment", parents=[common],
                       help="evaluate the state on a word")
    p.add_argument("--word", required=True,
                   help='e.g. "X:0 X:1 X:0 X:1" or "Y:0 X:1/2"')

    def add_basis_flags(p, degree=3, grid="-1,-1/2,0,1/2,1"):
        p.add_argument("--grid", default=grid,
                       help="comma separated rational times")
        p.add_argument("--degree", type=int, default=degree)

    p = sub.add_parser("conjugate", parents=[common],
                       help="solve for the conjugate variable")
    add_basis_flags(p)
    p.add_argument("--target", default="", help="generator id")
    p.add_argument("--b-gens", default="", help="comma separated other ids")
    p.add_argument("--time", default="0", help="target letter time")

    p = sub.add_parser("fisher", parents=[common],
                       help="summed normalized information of a family")
    add_basis_flags(p, degree=2, grid="-1/2,0,1/2")
    p.add_argument("--gens", default="", help="comma separated ids "
                   "(default: all)")

    p = sub.add_parser("cramer-rao", parents=[common],
                       help="information-variance audit")
    add_basis_flags(p, degree=2, grid="-1/2,0,1/2")
    p.add_argument("--gens", default="")

    p = sub.add_parser("chi-star", parents=[common],
                       help="entropy-style quadrature")
    add_basis_flags(p, degree=2, grid="-1/2,0,1/2")
    p.add_argument("--gens", default="")
    p.add_argument("--eps", default="0,0.25,0.5,0.75,1")
    p.add_argument("--tail-cutoff", type=float, default=10.0)

    p = sub.add_parser("verify-lemma2", parents=[common],
                       help="insertion identity on random inputs")
    p.add_argument("--target", default="")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--degree", type=int, default=4)

    p = sub.add_parser("verify-core", parents=[common],
                       help="crossed-product pairing identity")
    p.add_argument("--target", default="")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--x-degree", type=int, default=4)

    p = sub.add_parser("brownian", parents=[common],
                       help="noise expansion of a word")
    p.add_argument("--word", required=True)
    p.add_argument("--order", type=int, default=2)

    p = sub.add_parser("bound", parents=[common],
                       help="projection information bound")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)

    p = sub.add_parser("covariance", parents=[common],
                       help="modular covariance of the solver")
    add_basis_flags(p, degree=2, grid="-1/2,0,1/2")
    p.add_argument("--target", default="")
    p.add_argument("--shift", default="1/2")

    sub.add_parser("suite", parents=[common],
                   help="run the full acceptance battery")
    return parser


_VALUE_FLAGS = ("--grid", "--eps", "--shift", "--time", "--alpha", "--delta",
                "--tail-cutoff")


def _merge_negative_values(argv):
    # let `--grid -1,0,1` through argparse by folding the value into the flag
    out = []
    i = 0
    while i < len(argv):
        arg = argv[i]
        if (arg in _VALUE_FLAGS and i + 1 < len(argv)
                and argv[i + 1].startswith("-")):
            out.append(f"{arg}={argv[i + 1]}")
            i += 2
        else:
            out.append(arg)
            i += 1
    return out


def run(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(_merge_negative_values(list(argv)))
    started = time.perf_counter()
    try:
        m = load_model(args.model) if args.model else two_atom_model()
        handler = _HANDLERS[args.command]
        outputs, passed = handler(m, args)
    except (ConfigError, DetailedBalanceViolation, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = {
        "command": args.command,
        "model_digest": _model_digest(m),
        "inputs": {
            k: v
            for k, v in vars(args).items()
            if k not in ("command",) and v is not None
        },
        "outputs": outputs,
        "tolerance": args.tol,
        "passed": passed,
        "wall_time_s": time.perf_counter() - started,
    }
    print(json.dumps(_jsonify(report), sort_keys=True, indent=2))
    status = "ok" if passed in (True, None) else "FAIL"
    print(f"[{args.command}] {status}", file=sys.stderr)
    return 0 if passed in (True, None) else 1


def main() -> None:
    sys.exit(run())
