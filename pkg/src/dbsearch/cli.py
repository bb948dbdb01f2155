"""Command line entry point: ``dbsearch <subcommand> ...``.

Exit codes: 0 success, 1 no solution within the limits, 2 input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys

from . import analysis, bench
from .latin import emit_pls, generate_pls, parse_pls
from .tsp import InstanceError, parse_tsplib

EXIT_OK, EXIT_NO_SOLUTION, EXIT_INPUT = 0, 1, 2


def _strategy(text: str) -> bench.Strategy:
    try:
        return bench.parse_strategy(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _add_limits(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strategy", type=_strategy, default=bench.Strategy("DBS"),
                   help="LDS, DBS, DFS or IB:c0,c1,... (default DBS)")
    p.add_argument("--time-limit", type=float, default=bench.DEFAULT_TIME_LIMIT,
                   help="seconds of search (default %(default)s)")
    p.add_argument("--node-limit", type=int, default=None)


def _print_stats(rec: bench.RunRecord) -> None:
    s = rec.stats
    print(f"outcome: {rec.outcome}")
    print(f"time: {s.wall_time:.3f}s fails: {s.fails} nodes: {s.nodes_expanded} "
          f"leaves: {s.leaves_visited} discrepancy: {s.solution_discrepancy}")


def cmd_solve_tsp(args) -> int:
    inst = parse_tsplib(args.file)
    optimum = bench.resolve_optimum(inst, args.optimum)
    if args.optimum == "auto" and optimum is None:
        print(f"note: no optimum known for {inst.name}; searching to exhaustion", file=sys.stderr)
    task = bench.tsp_task(inst, optimum)
    rec = bench.run_one(task, args.strategy, args.time_limit, args.node_limit)
    print(f"instance: {inst.name} (n={inst.n}) strategy: {args.strategy.label} optimum: {optimum}")
    _print_stats(rec)
    if rec.solution is None:
        return EXIT_NO_SOLUTION
    print(f"length: {rec.objective}")
    print(f"tour: {task.render(rec.solution)}")
    return EXIT_OK if rec.found else EXIT_NO_SOLUTION


def cmd_solve_pls(args) -> int:
    inst = parse_pls(args.file)
    task = bench.pls_task(inst)
    rec = bench.run_one(task, args.strategy, args.time_limit, args.node_limit)
    print(f"instance: {inst.name} (order {inst.order}, {inst.holes} holes) "
          f"strategy: {args.strategy.label}")
    _print_stats(rec)
    if rec.solution is None:
        return EXIT_NO_SOLUTION
    print(task.render(rec.solution))
    return EXIT_OK


def cmd_gen_pls(args) -> int:
    try:
        inst = generate_pls(args.order, args.holes, args.balanced, args.seed)
    except ValueError as e:
        raise InstanceError(str(e)) from None
    if args.out:
        emit_pls(inst, args.out)
        print(f"wrote {inst.name} to {args.out}")
    else:
        from .latin import dumps_pls
        sys.stdout.write(dumps_pls(inst))
    return EXIT_OK


def curves_rows(b: int, n: int, family: str, plateaus: bool) -> list[tuple[str, int, float]]:
    if plateaus and b % 2:
        raise InstanceError("plateaus of size 2 need an even branching factor")
    spec = analysis.DistributionSpec(family, (b // 2, 2) if plateaus else None)
    model = analysis.make_distribution(spec, b, n)
    rows = []
    for schedule in analysis.SCHEDULES:
        for leaves, prob in analysis.cumulative_success(schedule, model):
            rows.append((schedule, leaves, prob))
    return rows


def cmd_curves(args) -> int:
    rows = curves_rows(args.b, args.n, args.family, args.plateaus)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["strategy", "leaves", "cum_prob"])
    for s, leaves, prob in rows:
        w.writerow([s, leaves, repr(prob)])
    if args.out and args.out != "-":
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_verify_theorems(args) -> int:
    rep = analysis.verify_theorems(args.max_b, args.max_n, args.seed, args.per_size)
    print(f"theorem 2: {rep.theorem2_points} grid points, {len(rep.theorem2_failures)} failures")
    print(f"theorem 3: {rep.theorem3_points} admissible grid points, "
          f"{len(rep.theorem3_failures)} inequality failures, "
          f"{len(rep.theorem3_strictness_failures)} unexpected equalities")
    eq = rep.equality_results
    adm = [r for r in eq if r["admissible"]]
    print(f"theorem 3 equality pairs: {sum(r['equal'] for r in adm)}/{len(adm)} admissible pairs equal")
    outside = [r for r in eq if not r["admissible"]]
    if outside:
        equal_outside = sum(r["equal"] for r in outside)
        print(f"  {len(outside)} listed pairs exceed the c^n leaf budget "
              f"({equal_outside} of them equal); reported only")
        if args.verbose:
            for r in outside:
                print(f"    b={r['b']} n={r['n']} c={r['c']} k={r['k']} lhs={r['lhs']:.15g} "
                      f"rhs={r['rhs']:.15g} ({r['reason']})")
    for label, fails in (("theorem 2", rep.theorem2_failures), ("theorem 3", rep.theorem3_failures),
                         ("theorem 3 strictness", rep.theorem3_strictness_failures)):
        for f in fails[:10]:
            print(f"  {label} counterexample: {f}")
    print("OK" if rep.ok else "FAILED")
    return EXIT_OK if rep.ok else EXIT_NO_SOLUTION


def cmd_bench(args) -> int:
    records, labels = bench.bench_from_config(args.config)
    print(bench.comparison_table(records, labels))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(bench.records_csv(records))
    return EXIT_OK if all(r.found for r in records) else EXIT_NO_SOLUTION


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dbsearch", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--log-level", default="WARNING",
                    choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-tsp", help="solve an explicit-matrix TSPLIB instance")
    p.add_argument("file")
    _add_limits(p)
    p.add_argument("--optimum", default="auto",
                   help="known optimum to stop at: an integer, 'auto' (Held-Karp for n <= 20 or a "
                        "bundled optimum) or 'none' (default auto)")
    p.set_defaults(func=cmd_solve_tsp)

    p = sub.add_parser("solve-pls", help="complete a partial latin square")
    p.add_argument("file")
    _add_limits(p)
    p.set_defaults(func=cmd_solve_pls)

    p = sub.add_parser("gen-pls", help="generate a partial latin square")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--holes", type=int, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--balanced", dest="balanced", action="store_true", default=True)
    g.add_argument("--unbalanced", dest="balanced", action="store_false")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_gen_pls)

    p = sub.add_parser("curves", help="cumulative success curves as CSV")
    p.add_argument("--b", type=int, default=8)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--family", choices=["linear", "poisson", "binomial"], default="linear")
    p.add_argument("--plateaus", action="store_true", help="average runs of 2 values")
    p.add_argument("--out", help="CSV file (default stdout)")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("verify-theorems", help="check the DBS vs LDS theorems on a grid")
    p.add_argument("--max-b", type=int, default=6)
    p.add_argument("--max-n", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-size", type=int, default=3, help="random models per grid cell")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_verify_theorems)

    p = sub.add_parser("bench", help="run an experiment described by a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="write per-run records as CSV")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InstanceError, FileNotFoundError, IsADirectoryError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
