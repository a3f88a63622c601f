"""Command line surface: `dist` computes a distance between two space
documents, `gen` emits deterministic corpora, `check` runs the invariant
suites.

Exit codes: 0 success, 1 invariant violation, 2 input error, 3 budget or
certification limit exceeded.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import checks, report
from .boxdist import box_distance
from .documents import (dumps_document, load_space, space_to_document)
from .errors import (InstanceTooLargeError, UncertifiedInstanceError,
                     ValidationError)
from .eurandom import EurBudget, eurandom_distance
from .generate import generate
from .observable import dconc_bounds
from .prohorov import prohorov_strassen

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3


def _emit(rep: dict, fmt: str) -> None:
    if fmt == "json":
        print(report.format_json(rep))
    else:
        print(report.format_table(rep))


def _cmd_dist(args) -> int:
    x = load_space(args.file_a)
    y = load_space(args.file_b)
    mode = "auto"
    if args.exact:
        mode = "exact"
    elif args.heuristic:
        mode = "heuristic"
    start = time.perf_counter()
    if args.kind == "prohorov":
        if x.n != y.n or np.max(np.abs(x.dist - y.dist)) > 1e-12:
            raise ValidationError("prohorov needs both documents on one metric space")
        value, coupling, pairs = prohorov_strassen(x.mass, y.mass, x.space)
        rep = report.build_prohorov_report(value, coupling, pairs, x.space,
                                           time.perf_counter() - start)
    elif args.kind == "box":
        clique_budget = args.budget if args.budget else 1_000_000
        cert = box_distance(x, y, mode="exact" if mode == "exact" else mode,
                            clique_budget=clique_budget)
        rep = report.build_box_report(cert, time.perf_counter() - start)
    elif args.kind == "eurandom":
        budget = EurBudget(max_nodes=args.budget) if args.budget else EurBudget()
        cert = eurandom_distance(x, y, budget)
        if mode == "exact" and cert.certified_error is None:
            raise InstanceTooLargeError(
                "no certified value at this size; rerun without --exact for the bound")
        rep = report.build_eurandom_report(cert, time.perf_counter() - start)
    else:  # dconc
        dim_budget = args.budget if args.budget else 2
        bounds = dconc_bounds(x, y, dim_budget=dim_budget, seed=args.seed)
        if mode == "exact" and bounds.certification == "uncertified":
            raise InstanceTooLargeError(
                "no certified bracket at this size; rerun without --exact")
        rep = report.build_dconc_report(bounds, time.perf_counter() - start)
    _emit(rep, args.format)
    return EXIT_OK


def _cmd_gen(args) -> int:
    space = generate(args.kind, args.n, seed=args.seed)
    name = args.name or f"{args.kind}{args.n}-seed{args.seed}"
    text = dumps_document(space_to_document(space, name)) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_check(args) -> int:
    if args.corpus:
        for path in sorted(Path(args.corpus).glob("*.json")):
            load_space(path)  # exit 2 with a diagnostic on any broken document
    results = checks.run_suite(args.suite, seed=args.seed, scale=args.scale,
                               tol=args.tolerance)
    failed = 0
    for res in sorted(results, key=lambda r: r.name):
        status = "PASS" if res.passed else "FAIL"
        line = {"check": res.name, "status": status, "detail": res.detail}
        if args.format == "json":
            import json
            print(json.dumps(line, sort_keys=True))
        else:
            print(f"[{status}] {res.name}: {res.detail}")
        if not res.passed:
            failed += 1
            for failure in res.failures:
                print(failure, file=sys.stderr)
    return EXIT_VIOLATION if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmdist",
        description="Distances between finite metric measure spaces, with certificates.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_dist = sub.add_parser("dist", help="distance between two space documents")
    p_dist.add_argument("kind", choices=["prohorov", "box", "eurandom", "dconc"])
    p_dist.add_argument("file_a")
    p_dist.add_argument("file_b")
    p_dist.add_argument("--exact", action="store_true",
                        help="demand an exact/certified answer (exit 3 if unaffordable)")
    p_dist.add_argument("--heuristic", action="store_true",
                        help="settle for a heuristic upper bound")
    p_dist.add_argument("--budget", type=int, default=None,
                        help="search budget (box: clique expansions; eurandom: "
                             "subdivision nodes; dconc: certified polytope dimension)")
    p_dist.add_argument("--seed", type=int, default=0)
    p_dist.add_argument("--format", choices=["table", "json"], default="table")
    p_dist.set_defaults(func=_cmd_dist)

    p_gen = sub.add_parser("gen", help="generate a space document")
    p_gen.add_argument("kind", choices=["random", "cycle", "line", "cube"])
    p_gen.add_argument("n", type=int)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--name", default=None)
    p_gen.add_argument("-o", "--output", default=None)
    p_gen.set_defaults(func=_cmd_gen)

    p_check = sub.add_parser("check", help="run the invariant suites")
    p_check.add_argument("suite", choices=["axioms", "lemmas", "all"])
    p_check.add_argument("--corpus", default=None,
                         help="directory of space documents to validate first")
    p_check.add_argument("--seed", type=int, default=0)
    p_check.add_argument("--scale", type=float, default=1.0,
                         help="multiplier on every draw count")
    p_check.add_argument("--tolerance", type=float, default=1e-9)
    p_check.add_argument("--format", choices=["table", "json"], default="table")
    p_check.set_defaults(func=_cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InstanceTooLargeError, UncertifiedInstanceError) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
