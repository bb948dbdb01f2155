"""Tree search over a :class:`~dbsearch.csp.Problem`.

The main driver, :func:`dbs_solve`, keeps a frontier of open nodes in a
priority queue. A node stores only its decision (variable restricted to a
cell of its partition) and a link to its parent; its domains are recomputed
by restoring the trail to the deepest common ancestor of the current state
and replaying the remaining decisions.

With single-valued cells and no depth bound the driver is plain LDS (or DFS
with the ``dfs`` selector). With multi-valued cells every node at which all
unfixed variables have been partitioned, or which sits at the depth bound,
is a subproblem solved by depth-first labelling.
"""

from __future__ import annotations

import heapq
import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from .csp import Problem, mask_of
from .ranking import (Evaluator, Partitioner, first_fail, natural_order,
                      partition_singletons, star_partitioner)

log = logging.getLogger(__name__)

SELECTORS = ("dfs", "lds", "lds_preference")
STOPS = ("first_solution", "optimum", "exhausted")


@dataclass
class SearchStats:
    fails: int = 0
    nodes_expanded: int = 0
    leaves_visited: int = 0
    solution_discrepancy: int | None = None
    wall_time: float = 0.0
    subproblems: int = 0
    solutions: int = 0

    def merge(self, other: "SearchStats") -> None:
        self.fails += other.fails
        self.nodes_expanded += other.nodes_expanded
        self.leaves_visited += other.leaves_visited
        self.subproblems += other.subproblems
        self.solutions += other.solutions
        self.wall_time += other.wall_time
        if other.solution_discrepancy is not None:
            self.solution_discrepancy = other.solution_discrepancy


@dataclass
class SearchConfig:
    variable_order: Callable[[Problem, Sequence[int]], int | None] = first_fail
    evaluator: Evaluator = natural_order
    partitioner: Partitioner = partition_singletons
    selector: str = "lds"
    depth_bound: int | None = None
    subproblem_strategy: str = "dfs"
    subproblem_evaluator: Evaluator | None = None
    stop: str = "first_solution"
    optimum: int | None = None
    node_limit: int | None = None
    time_limit: float | None = None
    # restrict expansion to cells with index <= max_cell
    max_cell: int | None = None
    # only solve subproblems whose largest path label equals this
    require_label: int | None = None
    on_leaf: Callable[[list[int], int], None] | None = None
    audit: bool = False

    def __post_init__(self):
        if self.selector not in SELECTORS:
            raise ValueError(f"unknown selector {self.selector!r}")
        if self.stop not in STOPS:
            raise ValueError(f"unknown stop criterion {self.stop!r}")
        if self.stop == "optimum" and self.optimum is None:
            raise ValueError("stop='optimum' needs a known optimum value")
        if self.subproblem_strategy != "dfs":
            raise ValueError("only depth-first subproblem solving is supported")


@dataclass
class SearchResult:
    solution: list[int] | None
    objective: int | None
    stats: SearchStats
    status: str  # solved | optimal | infeasible | limit

    def __iter__(self):
        yield self.solution
        yield self.stats


class SearchNode:
    __slots__ = ("parent", "var", "mask", "label", "depth", "discrepancy", "max_label",
                 "labels", "status")

    def __init__(self, parent, var, mask, label):
        self.parent = parent
        self.var = var
        self.mask = mask
        self.label = label
        self.status = "open"
        if parent is None:
            self.depth = 0
            self.discrepancy = 0
            self.max_label = 0
            self.labels = b""
        else:
            self.depth = parent.depth + 1
            self.discrepancy = parent.discrepancy + label
            self.max_label = max(parent.max_label, label)
            self.labels = parent.labels + label.to_bytes(2, "big")

    @property
    def path_labels(self) -> tuple[int, ...]:
        b = self.labels
        return tuple(int.from_bytes(b[i:i + 2], "big") for i in range(0, len(b), 2))

    def path(self) -> list["SearchNode"]:
        out = []
        node = self
        while node.parent is not None:
            out.append(node)
            node = node.parent
        out.reverse()
        return out

    def __repr__(self) -> str:
        return (f"SearchNode(depth={self.depth}, disc={self.discrepancy}, "
                f"labels={self.path_labels}, {self.status})")


# selector keys; the frontier pops the smallest key


def dfs_key(node: SearchNode):
    return (node.labels,)


def lds_key(node: SearchNode):
    return (node.discrepancy, node.labels)


def lds_preference_key(node: SearchNode):
    return (node.discrepancy, node.max_label, node.labels)


SELECTOR_KEYS = {"dfs": dfs_key, "lds": lds_key, "lds_preference": lds_preference_key}


def lds_select(frontier: Sequence[SearchNode]) -> SearchNode:
    return min(frontier, key=lds_key)


def lds_preference_select(frontier: Sequence[SearchNode]) -> SearchNode:
    return min(frontier, key=lds_preference_key)


class _Halt(Exception):
    pass


class Search:
    """One search run; holds stats, the incumbent and the limits."""

    def __init__(self, problem: Problem, config: SearchConfig):
        self.problem = problem
        self.config = config
        self.stats = SearchStats()
        self.best: list[int] | None = None
        self.best_value: int | None = None
        self.reached_optimum = False
        self.limit_hit = False
        self._start = 0.0
        self._deadline = None
        self._path: list[tuple[SearchNode, int]] = []
        self._sub_eval = config.subproblem_evaluator or config.evaluator
        self._more = False

    # bookkeeping

    def _begin(self):
        self._start = time.monotonic()
        if self.config.time_limit is not None:
            self._deadline = self._start + self.config.time_limit

    def _tick(self):
        cfg = self.config
        if cfg.node_limit is not None and self.stats.nodes_expanded >= cfg.node_limit:
            self.limit_hit = True
            raise _Halt
        if self._deadline is not None and time.monotonic() > self._deadline:
            self.limit_hit = True
            raise _Halt

    def _leaf(self, discrepancy: int):
        p = self.problem
        self.stats.leaves_visited += 1
        values = p.assignment()
        if self.config.on_leaf is not None:
            self.config.on_leaf(values, discrepancy)
        stop = self.config.stop
        if p.objective is not None:
            value = p.objective(values)
            if self.best_value is None or value < self.best_value:
                self.best, self.best_value = values, value
                self.stats.solutions += 1
                self.stats.solution_discrepancy = discrepancy
                p.incumbent = value
                log.debug("solution %s at discrepancy %d", value, discrepancy)
                if stop == "first_solution":
                    raise _Halt
                if stop == "optimum" and value <= self.config.optimum:
                    self.reached_optimum = True
                    raise _Halt
        else:
            self.stats.solutions += 1
            if self.best is None:
                self.best = values
                self.stats.solution_discrepancy = discrepancy
            if stop != "exhausted":
                raise _Halt

    def result(self) -> SearchResult:
        self.stats.wall_time = time.monotonic() - self._start
        p = self.problem
        if self.best is None:
            status = "limit" if self.limit_hit else "infeasible"
        elif p.objective is None:
            status = "solved"
        elif self.reached_optimum or not self.limit_hit and self.config.stop == "exhausted":
            status = "optimal"
        else:
            status = "limit" if self.limit_hit else "solved"
        return SearchResult(self.best, self.best_value, self.stats, status)

    # depth-first labelling

    def dfs(self, discrepancy: int = 0, breadth: int | None = None) -> None:
        """Label the current (propagated) state depth first."""
        self._tick()
        p = self.problem
        var = self.config.variable_order(p, range(p.n))
        if var is None:
            self._leaf(discrepancy)
            return
        ranked = self._sub_eval(p, var)
        if breadth is not None:
            ranked = ranked[:breadth]
        self.stats.nodes_expanded += 1
        for value, _ in ranked:
            level = p.save()
            if p.assign(var, value) and p.propagate():
                self.dfs(discrepancy, breadth)
            else:
                self.stats.fails += 1
            p.restore(level)

    def solve_subproblem_dfs(self, node: SearchNode) -> None:
        self.stats.subproblems += 1
        self.dfs(node.discrepancy)

    # frontier search

    def _goto(self, node: SearchNode) -> bool:
        """Recompute the state of ``node`` from the current one."""
        p = self.problem
        target = node.path()
        path = self._path
        i = 0
        while i < len(path) and i < len(target) and path[i][0] is target[i]:
            i += 1
        if i < len(path):
            p.restore(path[i][1])
            del path[i:]
        for n in target[i:]:
            level = p.save()
            path.append((n, level))
            if not (p.restrict(n.var, n.mask) and p.propagate()):
                return False
        return True

    def _unpartitioned(self) -> list[int]:
        done = {n.var for n, _ in self._path}
        return [v for v in range(self.problem.n) if v not in done]

    def expand(self, node: SearchNode, var: int, cells: Sequence[Sequence[int]]) -> list[SearchNode]:
        """Create the children of ``node`` for the given ordered partition.

        Each child is propagated on creation; failed children are counted and
        dropped. Empty cells are skipped without shifting later ranks.
        """
        p = self.problem
        cfg = self.config
        self.stats.nodes_expanded += 1
        node.status = "closed"
        dom = p.dom[var]
        todo = []
        for r, cell in enumerate(cells):
            if cfg.max_cell is not None and r > cfg.max_cell:
                break
            cm = mask_of(cell) & dom
            if cm:
                todo.append((r, cm))
        # best rank last, so its propagated state can stay in place: the
        # selectors usually pop it next and _goto then has nothing to replay
        children = []
        for idx in range(len(todo) - 1, -1, -1):
            r, cm = todo[idx]
            level = p.save()
            ok = p.restrict(var, cm) and p.propagate()
            if not ok:
                p.restore(level)
                self.stats.fails += 1
                continue
            child = SearchNode(node, var, cm, r)
            children.append(child)
            if idx == 0:
                self._path.append((child, level))
            else:
                p.restore(level)
        children.reverse()
        return children

    def run_frontier(self) -> None:
        p = self.problem
        cfg = self.config
        key = SELECTOR_KEYS[cfg.selector]
        if not p.propagate(None):
            self.stats.fails += 1
            return
        base = p.save()
        root = SearchNode(None, -1, 0, 0)
        heap = [(key(root), 0, root)]
        counter = 1
        closed: set[int] = set()
        self._path = []
        try:
            while heap:
                _, _, node = heapq.heappop(heap)
                if not self._goto(node):
                    # the incumbent may have tightened since creation
                    self.stats.fails += 1
                    node.status = "closed"
                    continue
                self._tick()
                at_bound = cfg.depth_bound is not None and node.depth >= cfg.depth_bound
                var = None if at_bound else cfg.variable_order(p, self._unpartitioned())
                if var is None:
                    node.status = "closed"
                    if cfg.require_label is None or node.max_label == cfg.require_label:
                        self.solve_subproblem_dfs(node)
                    continue
                ranked = cfg.evaluator(p, var)
                cells = cfg.partitioner(ranked)
                for child in self.expand(node, var, cells):
                    heapq.heappush(heap, (key(child), counter, child))
                    counter += 1
                if cfg.audit:
                    closed.add(id(node))
                    audit_frontier([entry[2] for entry in heap], closed)
        except _Halt:
            pass
        finally:
            p.restore(base)
            self._path = []


def audit_frontier(open_nodes: Sequence[SearchNode], closed_ids: set[int]) -> None:
    """Check the open/closed node rules; raises AssertionError on violation."""
    open_ids = {id(n) for n in open_nodes}
    for n in open_nodes:
        assert n.status == "open", f"{n} in frontier but not open"
        a = n.parent
        while a is not None:
            assert id(a) not in open_ids, f"open node {n} has open ancestor {a}"
            assert a.status == "closed" and (a.parent is None or id(a) in closed_ids), \
                f"ancestor {a} of open node {n} is not closed"
            a = a.parent


# entry points


def dbs_solve(problem: Problem, config: SearchConfig) -> SearchResult:
    s = Search(problem, config)
    s._begin()
    s.run_frontier()
    return s.result()


def lds_config(**kw) -> SearchConfig:
    kw.setdefault("partitioner", partition_singletons)
    kw.setdefault("selector", "lds")
    return SearchConfig(**kw)


def dfs_solve(problem: Problem, config: SearchConfig, breadth: int | None = None) -> SearchResult:
    s = Search(problem, config)
    s._begin()
    _dfs_from_root(s, breadth)
    return s.result()


def _dfs_from_root(s: Search, breadth: int | None) -> None:
    p = s.problem
    base = p.save()
    try:
        if p.propagate(None):
            s.dfs(0, breadth)
        else:
            s.stats.fails += 1
    except _Halt:
        pass
    finally:
        p.restore(base)


def ib_solve(problem: Problem, cutoffs: Sequence[int], config: SearchConfig) -> SearchResult:
    """Iterative broadening: depth-first search restricted to the first c_t
    ranked values of each variable, restarted from the root for each c_t."""
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ValueError(f"cutoffs must increase: {cutoffs}")
    s = Search(problem, config)
    s._begin()
    for c in cutoffs:
        before = s.stats.solutions
        _dfs_from_root(s, c)
        if s.limit_hit or s.reached_optimum:
            break
        if s.stats.solutions > before and config.stop == "first_solution":
            break
    return s.result()


def lds_classic(problem: Problem, config: SearchConfig) -> SearchResult:
    """Limited discrepancy search by waves: wave k revisits the tree from the
    root and visits exactly the leaves of discrepancy k, left to right."""
    s = Search(problem, config)
    s._begin()
    p = problem
    base = p.save()
    try:
        if not p.propagate(None):
            s.stats.fails += 1
            return s.result()
        k = 0
        while True:
            s._more = False
            _probe(s, k)
            if not s._more:
                break
            k += 1
    except _Halt:
        pass
    finally:
        p.restore(base)
    return s.result()


def _probe(s: Search, remaining: int, spent: int = 0) -> None:
    s._tick()
    p = s.problem
    var = s.config.variable_order(p, range(p.n))
    if var is None:
        if remaining == 0:
            s._leaf(spent)
        return
    ranked = s.config.evaluator(p, var)
    s.stats.nodes_expanded += 1
    for r, (value, _) in enumerate(ranked):
        if r > remaining:
            s._more = True
            break
        level = p.save()
        if p.assign(var, value) and p.propagate():
            _probe(s, remaining - r, spent + r)
        else:
            s.stats.fails += 1
        p.restore(level)


def dbs_star(problem: Problem, cutoffs: Sequence[int], t: int, config: SearchConfig) -> SearchResult:
    """The DBS runs that emulate one IB iteration: star cells up to index t,
    preference-ordered LDS, and only subproblems that use cell t."""
    cfg = replace(config, partitioner=star_partitioner(cutoffs), selector="lds_preference",
                  max_cell=t, require_label=t, stop="exhausted")
    return dbs_solve(problem, cfg)


def synthetic_tree(b: int, n: int) -> Problem:
    """Unconstrained CSP whose ordered search tree is the full b-ary tree."""
    return Problem([range(b)] * n)
