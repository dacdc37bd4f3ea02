"""Command-line entry point: ``rankwitness <subcommand> ...``.

Every subcommand prints one JSON document (or a plain table with
``--format table``). Exit codes: 0 success / Consistent, 2 usage error,
3 Refuted, 4 Inconclusive, 5 input validation error.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import json
import os
import sys
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np

from . import io
from .dist import condition_slice, marginalize
from .errors import RankWitnessError
from .graph import SeparationQuery, d_separated, find_hidden_separators
from .nnrank import RankConfig, nonnegative_rank
from .protocols import (
    correlation_complexity,
    protocol_from_dict,
    simulate,
    tradeoff_check,
)
from .psd import PsdFactorization, psd_rank_bounds, psd_search, verify_psd_factorization
from .witness import (
    CausalHypothesis,
    achievable_region,
    brute_force_response_oracle,
    perfect_correlation_check,
    witness_direct_influence,
)

EXIT_OK, EXIT_USAGE, EXIT_REFUTED, EXIT_INCONCLUSIVE, EXIT_INPUT = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


@lru_cache(maxsize=None)
def _schema(name: str) -> dict:
    text = resources.files("rankwitness").joinpath("schemas", f"{name}.json").read_text()
    return json.loads(text)


def _default_seed() -> int:
    raw = os.environ.get("RANKWITNESS_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        return 0


def _pair(text: str) -> tuple:
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}") from None
    return a, b


def _names(text) -> list:
    if text is None:
        return []
    out = []
    for chunk in text if isinstance(text, list) else [text]:
        out.extend(v.strip() for v in chunk.split(",") if v.strip())
    return out


def _config(args) -> RankConfig:
    return RankConfig(restarts=args.restarts, max_iters=args.max_iters, residual_tol=args.tol,
                      seed=args.seed, exact_lb_max_support=args.exact_lb_max_support, arith=args.arith)


# --- subcommands ----------------------------------------------------------
# each returns (schema name, payload, exit code)


def cmd_rank(args):
    M = io.load_matrix(args.matrix)
    bounds = nonnegative_rank(M, _config(args))
    out = bounds.to_dict(with_certificate=not args.no_certificate)
    out["config"] = _config(args).to_dict()
    return "rank", out, EXIT_OK


def cmd_psd_rank(args):
    M = io.load_matrix(args.matrix)
    nn = nonnegative_rank(M, _config(args))
    cert, verified, source = None, None, None
    if args.certificate:
        cert = PsdFactorization.from_dict(io.load_json(args.certificate))
        verified = verify_psd_factorization(M, cert, args.psd_tol)
        source = "file"
    elif args.search is not None:
        cert = psd_search(M, args.search, restarts=args.search_restarts, seed=args.seed)
        verified = cert is not None and verify_psd_factorization(M, cert, args.psd_tol)
        source = "search"
    bounds = psd_rank_bounds(M, nn, cert if verified else None, args.psd_tol)
    out = bounds.to_dict()
    out["nonnegative_rank"] = {"lower": nn.lower, "upper": nn.upper, "exact": nn.exact}
    out["certificate_verified"] = verified
    out["certificate_source"] = source
    if args.emit_certificate and verified:
        out["certificate"] = cert.to_dict()
    return "psd_rank", out, EXIT_OK


def cmd_dsep(args):
    g = io.load_graph(args.graph)
    q = SeparationQuery.of(_names(args.x), _names(args.y), _names(args.z))
    return "dsep", {
        "d_separated": d_separated(g, q),
        "x": sorted(q.x_set), "y": sorted(q.y_set), "z": sorted(q.z_set),
    }, EXIT_OK


def cmd_witness(args):
    raw = io.load_json(args.graph)
    g = io.load_graph(args.graph)
    target = raw.get("target") if isinstance(raw, dict) else None
    x = args.x or (target[0] if target else None)
    y = args.y or (target[1] if target else None)
    if not x or not y:
        raise UsageError("witness needs --x and --y (or a 'target' pair in the graph JSON)")
    given = _names(args.given) if args.given is not None else list(raw.get("conditioning", []))
    data = io.load_distribution(args.data)
    hyp = CausalHypothesis(g, (x, y), frozenset(given))
    verdict = witness_direct_influence(hyp, data, _config(args))
    out = verdict.to_dict()
    out["separators"] = [{"hidden": sorted(s), "cardinality": c}
                         for s, c in find_hidden_separators(g, x, y, given)]
    return "verdict", out, verdict.exit_code


def cmd_perfect_corr(args):
    verdict = perfect_correlation_check(args.ex_x, args.ex_y, args.ex_xy, args.check_tol)
    return "verdict", verdict.to_dict(), verdict.exit_code


def cmd_oracle(args):
    if args.target is not None:
        rep = brute_force_response_oracle(args.target, args.oracle_tol, args.grid)
        return "oracle", rep.to_dict(), EXIT_OK
    region = achievable_region(args.grid)
    pts = np.unique(np.round(region, 12), axis=0)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["function_index", "p_u_plus", "ex_x_z_plus", "ex_x_z_minus"])
    for fi, q, a, b in pts:
        w.writerow([int(fi), repr(float(q)), repr(float(a)), repr(float(b))])
    return None, buf.getvalue(), EXIT_OK


def cmd_protocol(args):
    if args.action == "simulate":
        if not args.input:
            raise UsageError("protocol simulate needs --in")
        p = protocol_from_dict(io.load_json(args.input))
        return "distribution", io.dist_to_dict(simulate(p)), EXIT_OK
    if not args.matrix:
        raise UsageError(f"protocol {args.action} needs --matrix")
    M = io.load_matrix(args.matrix)
    if args.action == "complexity":
        return "complexity", correlation_complexity(M, _config(args)).to_dict(), EXIT_OK
    if args.z1 is None or args.z2 is None:
        raise UsageError("protocol tradeoff needs --z1 and --z2")
    ok, report = tradeoff_check(args.z1, args.z2, M, _config(args))
    return "tradeoff", report, EXIT_OK


def cmd_slice(args):
    dist = io.load_distribution(args.data)
    given = _names(args.given)
    values = [int(v) for v in _names(args.value)]
    if args.keep:
        dist = marginalize(dist, _names(args.keep) + given)
    sl = condition_slice(dist, tuple(values), tuple(given))
    out = io.dist_to_dict(sl.dist)
    out["conditioning"] = {v: z for v, z in zip(given, values)}
    out["probability"] = str(sl.probability) if dist.exact else float(sl.probability)
    return "distribution", out, EXIT_OK


def cmd_complexity(args):
    M = io.load_matrix(args.matrix)
    return "complexity", correlation_complexity(M, _config(args)).to_dict(), EXIT_OK


# --- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "table"), default="json")
    common.add_argument("--arith", choices=("auto", "exact", "float"), default="auto")
    common.add_argument("--seed", type=int, default=_default_seed())
    common.add_argument("--restarts", type=int, default=32)
    common.add_argument("--max-iters", type=int, default=5000)
    common.add_argument("--tol", type=float, default=1e-9, help="NMF relative residual tolerance")
    common.add_argument("--exact-lb-max-support", type=int, default=24)

    parser = argparse.ArgumentParser(prog="rankwitness", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank", parents=[common], help="nonnegative rank bounds")
    p.add_argument("--matrix", required=True)
    p.add_argument("--no-certificate", action="store_true")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("psd-rank", parents=[common], help="PSD rank bounds")
    p.add_argument("--matrix", required=True)
    p.add_argument("--certificate")
    p.add_argument("--search", type=int, metavar="R", help="search for an R×R PSD factorization")
    p.add_argument("--search-restarts", type=int, default=20)
    p.add_argument("--psd-tol", type=float, default=1e-8)
    p.add_argument("--emit-certificate", action="store_true")
    p.set_defaults(func=cmd_psd_rank)

    p = sub.add_parser("dsep", parents=[common], help="d-separation query")
    p.add_argument("--graph", required=True)
    p.add_argument("--x", required=True, action="append")
    p.add_argument("--y", required=True, action="append")
    p.add_argument("--z", action="append")
    p.set_defaults(func=cmd_dsep)

    p = sub.add_parser("witness", parents=[common], help="test a causal hypothesis against data")
    p.add_argument("--graph", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--given", action="append")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("perfect-corr", parents=[common], help="binary perfect-correlation check")
    p.add_argument("--ex-x", type=_pair, required=True, help="<X|z=+1>,<X|z=-1>")
    p.add_argument("--ex-y", type=_pair, required=True, help="<Y|z=+1>,<Y|z=-1>")
    p.add_argument("--ex-xy", type=_pair, default=(1.0, 1.0), help="<XY|z=+1>,<XY|z=-1>")
    p.add_argument("--check-tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_perfect_corr)

    p = sub.add_parser("oracle", parents=[common], help="brute-force achievable region (CSV)")
    p.add_argument("--grid", type=int, default=256, help="grid steps for P(U=+1)")
    p.add_argument("--target", type=_pair)
    p.add_argument("--oracle-tol", type=float, default=1 / 128)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("protocol", parents=[common], help="distribution-generation protocols")
    p.add_argument("action", choices=("simulate", "complexity", "tradeoff"))
    p.add_argument("--in", dest="input")
    p.add_argument("--matrix")
    p.add_argument("--z1", type=int)
    p.add_argument("--z2", type=int)
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("slice", parents=[common], help="condition a distribution on observed values")
    p.add_argument("--data", required=True)
    p.add_argument("--given", required=True, action="append")
    p.add_argument("--value", required=True, action="append")
    p.add_argument("--keep", action="append")
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("complexity", parents=[common], help="RCorr = RComm in bits")
    p.add_argument("--matrix", required=True)
    p.set_defaults(func=cmd_complexity)
    return parser


def _table(payload, prefix="") -> str:
    lines = []
    if isinstance(payload, dict):
        for k, v in payload.items():
            if isinstance(v, (dict, list)) and v and not all(isinstance(e, (int, float, str)) for e in v):
                lines.append(f"{prefix}{k}:")
                lines.append(_table(v, prefix + "  "))
            else:
                lines.append(f"{prefix}{k}: {v}")
    elif isinstance(payload, list):
        for i, v in enumerate(payload):
            lines.append(f"{prefix}[{i}]")
            lines.append(_table(v, prefix + "  "))
    else:
        lines.append(f"{prefix}{payload}")
    return "\n".join(line for line in lines if line)


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        schema, payload, code = args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return EXIT_USAGE
    except (RankWitnessError, KeyError, TypeError, ValueError) as exc:
        print(f"input error: {exc}", file=stderr)
        return EXIT_INPUT
    if schema is None:
        stdout.write(payload)
        return code
    payload = {"command": args.command, **payload}
    jsonschema.validate(payload, _schema(schema))
    if args.format == "table":
        stdout.write(_table(payload) + "\n")
    else:
        stdout.write(json.dumps(payload, indent=2) + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
