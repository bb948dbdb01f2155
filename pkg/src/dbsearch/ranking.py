"""Value evaluators, variable orderings and domain partitioners.

An evaluator maps ``(problem, var)`` to a :class:`RankedValues` sequence
sorted best first (higher rank is better). A partitioner turns that sequence
into an ordered list of cells, best cell first.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Mapping, Sequence

from .csp import Problem

RankedValues = list[tuple[int, float]]
DomainPartition = list[list[int]]
Evaluator = Callable[[Problem, int], RankedValues]
Partitioner = Callable[[RankedValues], DomainPartition]

RELATIVE_EPS = 1e-9


def rank_sorted(pairs: Iterable[tuple[int, float]]) -> RankedValues:
    """Sort best first; equal ranks keep increasing value order."""
    return sorted(pairs, key=lambda vr: (-vr[1], vr[0]))


def rank_reduced_cost(var: int, reduced_cost_row: Mapping[int, float] | Sequence[float],
                      values: Iterable[int] | None = None) -> RankedValues:
    """Lowest reduced cost ranks best."""
    if values is None:
        values = reduced_cost_row.keys() if isinstance(reduced_cost_row, Mapping) \
            else range(len(reduced_cost_row))
    return rank_sorted((v, -reduced_cost_row[v]) for v in values)


def rank_occurrence(counts: Mapping[int, int], values: Iterable[int]) -> RankedValues:
    """A value that occurs more often among the filled cells ranks best."""
    return rank_sorted((v, counts.get(v, 0)) for v in values)


def natural_order(problem: Problem, var: int) -> RankedValues:
    """Smaller values rank best; used for unconstrained synthetic trees."""
    return [(v, -v) for v in problem.values(var)]


# partitioners


def partition_singletons(ranked: RankedValues) -> DomainPartition:
    return [[v] for v, _ in ranked]


def partition_plateau(ranked: RankedValues, epsilon: float = 0.0,
                      relative: bool = False) -> DomainPartition:
    """Group consecutive values whose ranks are within ``epsilon``."""
    if not ranked:
        raise ValueError("cannot partition an empty ranking")
    cells = [[ranked[0][0]]]
    prev = ranked[0][1]
    for value, rank in ranked[1:]:
        tol = epsilon * max(abs(prev), abs(rank), 1.0) if relative else epsilon
        if abs(prev - rank) <= tol:
            cells[-1].append(value)
        else:
            cells.append([value])
        prev = rank
    return cells


def partition_best_plateau(ranked: RankedValues, epsilon: float = 0.0,
                           relative: bool = False) -> DomainPartition:
    """Two cells: the best plateau, then every other value in rank order."""
    cells = partition_plateau(ranked, epsilon, relative)
    if len(cells) <= 2:
        return cells
    return [cells[0], [v for cell in cells[1:] for v in cell]]


def partition_star(ranked: RankedValues, cutoffs: Sequence[int]) -> DomainPartition:
    """Cells bounded by increasing breadth cutoffs c_0 < c_1 < ...

    Cutoffs beyond the ranking length truncate the last cell.
    """
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])) or (cutoffs and cutoffs[0] < 1):
        raise ValueError(f"cutoffs must be positive and strictly increasing: {cutoffs}")
    values = [v for v, _ in ranked]
    cells, start = [], 0
    for c in cutoffs:
        cell = values[start:c]
        if cell:
            cells.append(cell)
        start = c
        if start >= len(values):
            break
    return cells


def partition_percentile(ranked: RankedValues, fractions: Sequence[float]) -> DomainPartition:
    """Cell sizes proportional to ``fractions``; earlier cells round up."""
    if abs(math.fsum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {fractions}")
    values = [v for v, _ in ranked]
    total = len(values)
    cells, start = [], 0
    for i, f in enumerate(fractions):
        if i == len(fractions) - 1:
            size = total - start
        else:
            size = min(math.ceil(f * total - 1e-9), total - start)
        if size > 0:
            cells.append(values[start:start + size])
        start += size
    return cells


def plateau_partitioner(epsilon: float = 0.0, relative: bool = False) -> Partitioner:
    return lambda ranked: partition_plateau(ranked, epsilon, relative)


def best_plateau_partitioner(epsilon: float = 0.0, relative: bool = False) -> Partitioner:
    return lambda ranked: partition_best_plateau(ranked, epsilon, relative)


def star_partitioner(cutoffs: Sequence[int]) -> Partitioner:
    cutoffs = tuple(cutoffs)
    return lambda ranked: partition_star(ranked, cutoffs)


def percentile_partitioner(fractions: Sequence[float]) -> Partitioner:
    fractions = tuple(fractions)
    return lambda ranked: partition_percentile(ranked, fractions)


def check_partition(cells: DomainPartition, ranked: RankedValues) -> None:
    """Raise AssertionError unless ``cells`` is an ordered disjoint cover of ``ranked``."""
    rank = dict(ranked)
    flat = [v for cell in cells for v in cell]
    assert len(flat) == len(set(flat)), "cells overlap"
    assert set(flat) == set(rank), "cells do not cover the domain"
    assert all(cells), "empty cell"
    for a, b in zip(cells, cells[1:]):
        assert min(rank[v] for v in a) >= max(rank[v] for v in b), "cells out of rank order"


# variable orderings; each returns the chosen variable or None


def first_fail(problem: Problem, candidates: Iterable[int]) -> int | None:
    best, best_size = None, None
    dom = problem.dom
    for v in candidates:
        s = dom[v].bit_count()
        if s > 1 and (best_size is None or s < best_size):
            best, best_size = v, s
            if s == 2:
                break
    return best


def most_constrained(problem: Problem, candidates: Iterable[int]) -> int | None:
    best, best_deg = None, -1
    for v in candidates:
        if problem.dom[v].bit_count() > 1:
            deg = len(problem.watchers[v])
            if deg > best_deg:
                best, best_deg = v, deg
    return best


def input_order(problem: Problem, candidates: Iterable[int]) -> int | None:
    for v in candidates:
        if problem.dom[v].bit_count() > 1:
            return v
    return None


VARIABLE_ORDERS = {"first_fail": first_fail, "most_constrained": most_constrained,
                   "input_order": input_order}
