"""Experiment orchestration: strategies, run records and comparison tables."""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .csp import Problem
from .latin import PlsInstance, PlsModel, generate_pls, parse_pls, verify_latin
from .ranking import best_plateau_partitioner, plateau_partitioner, RELATIVE_EPS
from .search import (SearchConfig, SearchResult, SearchStats, dbs_solve, dfs_solve,
                     ib_solve, lds_config)
from .tsp import (KNOWN_OPTIMA, TspInstance, TspModel, bundled_instance, held_karp,
                  parse_tsplib, verify_tour)

log = logging.getLogger(__name__)

DEFAULT_TIME_LIMIT = 900.0


@dataclass(frozen=True)
class Strategy:
    kind: str  # LDS | DBS | DFS | IB
    cutoffs: tuple[int, ...] = ()

    @property
    def label(self) -> str:
        return f"IB:{','.join(map(str, self.cutoffs))}" if self.kind == "IB" else self.kind


def parse_strategy(text: str) -> Strategy:
    """``LDS``, ``DBS``, ``DFS`` or ``IB:c0,c1,...`` (case-insensitive)."""
    head, _, tail = text.strip().partition(":")
    kind = head.strip().upper()
    if kind == "IB":
        try:
            cutoffs = tuple(int(c) for c in tail.split(",") if c.strip())
        except ValueError:
            raise ValueError(f"bad IB cutoffs in {text!r}") from None
        if not cutoffs or any(b <= a for a, b in zip(cutoffs, cutoffs[1:])) or cutoffs[0] < 1:
            raise ValueError(f"IB needs positive increasing cutoffs, got {text!r}")
        return Strategy("IB", cutoffs)
    if kind in ("LDS", "DBS", "DFS") and not tail:
        return Strategy(kind)
    raise ValueError(f"unknown strategy {text!r}; expected LDS, DBS, DFS or IB:c0,c1,...")


@dataclass
class Task:
    """A fresh problem plus everything a strategy needs to solve and check it."""

    name: str
    problem: Problem
    evaluator: Callable
    dbs_partitioner: Callable
    verify: Callable[[list[int]], int | None]
    optimum: int | None = None
    render: Callable[[list[int]], str] = str


def tsp_task(inst: TspInstance, optimum: int | None = None) -> Task:
    m = TspModel(inst)

    def check(succ):
        return verify_tour(inst, succ)

    def render(succ):
        return " ".join(map(str, m.tour(succ)))

    return Task(inst.name, m.problem, m.evaluator, best_plateau_partitioner(RELATIVE_EPS, True),
                check, optimum, render)


def pls_task(inst: PlsInstance) -> Task:
    m = PlsModel(inst)

    def check(values):
        verify_latin(m.grid(values), inst)
        return None

    def render(values):
        return "\n".join(" ".join(map(str, row)) for row in m.grid(values))

    return Task(inst.name, m.problem, m.evaluator, plateau_partitioner(0.0), check, None, render)


def resolve_optimum(inst: TspInstance, optimum: str | int | None) -> int | None:
    """``auto``: Held-Karp up to 20 cities, else the known optimum of a bundled name."""
    if optimum is None or optimum == "none":
        return None
    if optimum == "auto":
        if inst.n <= 20:
            return held_karp(inst)
        return KNOWN_OPTIMA.get(inst.name)
    return int(optimum)


def solve(task: Task, strategy: Strategy, time_limit: float | None = None,
          node_limit: int | None = None) -> SearchResult:
    stop = "optimum" if task.optimum is not None else (
        "first_solution" if task.problem.objective is None else "exhausted")
    common = dict(evaluator=task.evaluator, stop=stop, optimum=task.optimum,
                  time_limit=time_limit, node_limit=node_limit)
    if strategy.kind == "LDS":
        return dbs_solve(task.problem, lds_config(**common))
    if strategy.kind == "DBS":
        return dbs_solve(task.problem, SearchConfig(partitioner=task.dbs_partitioner, **common))
    cfg = SearchConfig(selector="dfs", **common)
    if strategy.kind == "DFS":
        return dfs_solve(task.problem, cfg)
    return ib_solve(task.problem, strategy.cutoffs, cfg)


@dataclass
class RunRecord:
    instance: str
    strategy: str
    stats: SearchStats
    outcome: str  # solved | optimal | infeasible | limit
    objective: int | None = None
    solution: list[int] | None = field(default=None, repr=False)

    @property
    def found(self) -> bool:
        return self.solution is not None and self.outcome != "limit"


def run_one(task: Task, strategy: Strategy, time_limit: float | None = DEFAULT_TIME_LIMIT,
            node_limit: int | None = None) -> RunRecord:
    res = solve(task, strategy, time_limit, node_limit)
    if res.solution is not None:
        value = task.verify(res.solution)
        if value is not None and value != res.objective:
            raise AssertionError(f"{task.name}: reported cost {res.objective}, re-verified {value}")
    outcome = res.status
    if task.optimum is not None and res.objective is not None and res.objective > task.optimum:
        outcome = "limit"
    log.info("%s %s %s %.3fs fails=%d", task.name, strategy.label, outcome,
             res.stats.wall_time, res.stats.fails)
    return RunRecord(task.name, strategy.label, res.stats, outcome, res.objective, res.solution)


def run_experiment(task_factories: Sequence[Callable[[], Task]], strategies: Sequence[Strategy],
                   time_limit: float | None = DEFAULT_TIME_LIMIT,
                   node_limit: int | None = None) -> list[RunRecord]:
    """Every (instance, strategy) cell, each on a freshly built problem."""
    records = []
    for make in task_factories:
        for s in strategies:
            records.append(run_one(make(), s, time_limit, node_limit))
    records.sort(key=lambda r: (r.instance, r.strategy))
    return records


def comparison_table(records: Sequence[RunRecord], strategies: Sequence[str]) -> str:
    """Per-instance time, fails and discrepancy per strategy plus sum and mean rows.

    Runs stopped by a limit show ``N.A.`` and are left out of the aggregates.
    """
    by = {(r.instance, r.strategy): r for r in records}
    instances = sorted({r.instance for r in records})
    header = ["instance"] + [f"{s} {col}" for s in strategies for col in ("time(s)", "fails", "discr")]
    rows = [header]
    totals = {s: [0.0, 0, 0, 0] for s in strategies}
    for inst in instances:
        row = [inst]
        for s in strategies:
            r = by.get((inst, s))
            if r is None or not r.found:
                row += ["N.A."] * 3
                continue
            d = r.stats.solution_discrepancy or 0
            row += [f"{r.stats.wall_time:.2f}", str(r.stats.fails), str(d)]
            t = totals[s]
            t[0] += r.stats.wall_time
            t[1] += r.stats.fails
            t[2] += d
            t[3] += 1
        rows.append(row)
    sums, means = ["sum"], ["mean"]
    for s in strategies:
        t, k = totals[s], max(totals[s][3], 1)
        sums += [f"{t[0]:.2f}", str(t[1]), str(t[2])]
        means += [f"{t[0] / k:.2f}", f"{t[1] / k:.2f}", f"{t[2] / k:.2f}"]
    rows += [sums, means]
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)


def records_csv(records: Sequence[RunRecord]) -> str:
    lines = ["instance,strategy,outcome,objective,time_s,fails,nodes,leaves,discrepancy"]
    for r in records:
        s = r.stats
        lines.append(",".join(str(x) for x in (
            r.instance, r.strategy, r.outcome, "" if r.objective is None else r.objective,
            f"{s.wall_time:.4f}", s.fails, s.nodes_expanded, s.leaves_visited,
            "" if s.solution_discrepancy is None else s.solution_discrepancy)))
    return "\n".join(lines) + "\n"


# bench config files


def read_config(path: str | os.PathLike) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key in out:
                raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = value
    return out


CONFIG_KEYS = {"problem", "instances", "strategies", "time_limit", "node_limit", "seed",
               "count", "order", "holes", "balanced", "optimum"}


def _split(value: str) -> list[str]:
    # strategy lists hold commas inside IB cutoffs, so items are separated by ';' or whitespace
    return [s for s in value.replace(";", " ").split() if s]


def tasks_from_config(cfg: dict[str, str], base_dir: str = ".") -> list[Callable[[], Task]]:
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kind = cfg.get("problem", "tsp").lower()
    factories: list[Callable[[], Task]] = []
    if kind == "tsp":
        opt_mode = cfg.get("optimum", "auto")
        for name in _split(cfg.get("instances", "")):
            path = os.path.join(base_dir, name)
            inst = parse_tsplib(path) if os.path.exists(path) else bundled_instance(name)
            opt = resolve_optimum(inst, opt_mode)
            factories.append(lambda inst=inst, opt=opt: tsp_task(inst, opt))
    elif kind == "pls":
        files = _split(cfg.get("instances", ""))
        for name in files:
            inst = parse_pls(os.path.join(base_dir, name))
            factories.append(lambda inst=inst: pls_task(inst))
        count = int(cfg.get("count", "0"))
        if count:
            order = int(cfg.get("order", "25"))
            holes = int(cfg.get("holes", str(round(0.38 * order * order))))
            balanced = cfg.get("balanced", "true").lower() in ("1", "true", "yes")
            seed = int(cfg.get("seed", "0"))
            for i in range(count):
                inst = generate_pls(order, holes, balanced, seed + i)
                factories.append(lambda inst=inst: pls_task(inst))
    else:
        raise ValueError(f"unknown problem kind {kind!r}; expected tsp or pls")
    if not factories:
        raise ValueError("config names no instances")
    return factories


def bench_from_config(path: str | os.PathLike) -> tuple[list[RunRecord], list[str]]:
    cfg = read_config(path)
    factories = tasks_from_config(cfg, os.path.dirname(os.path.abspath(path)))
    strategies = [parse_strategy(s) for s in _split(cfg.get("strategies", "LDS DBS"))]
    tl = cfg.get("time_limit")
    nl = cfg.get("node_limit")
    records = run_experiment(factories, strategies,
                             float(tl) if tl else DEFAULT_TIME_LIMIT,
                             int(nl) if nl else None)
    return records, [s.label for s in strategies]


def aggregate_time(records: Sequence[RunRecord], strategy: str) -> float:
    """Total wall time of a strategy; infinite when any of its runs hit a limit."""
    rs = [r for r in records if r.strategy == strategy]
    if any(not r.found for r in rs):
        return math.inf
    return math.fsum(r.stats.wall_time for r in rs)
