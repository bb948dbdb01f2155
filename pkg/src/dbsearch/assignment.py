"""Linear assignment by shortest augmenting paths, with integer duals.

The duals give reduced costs ``c[i][j] - u[i] - v[j]`` which are zero on the
optimal matching and non-negative everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence


class Infeasible(Exception):
    """No perfect matching avoids the forbidden pairs."""


@dataclass
class AssignmentResult:
    optimal_value: int
    matching: list[int]
    row_duals: list[int]
    col_duals: list[int]
    reduced_costs: list[list[int]]

    def reduced_cost(self, i: int, j: int) -> int:
        return self.reduced_costs[i][j]


def sentinel_cost(cost: Sequence[Sequence[int]]) -> int:
    n = len(cost)
    top = max((max(row) for row in cost), default=0)
    big = 1 + n * max(top, 0)
    assert big < 2**62, "sentinel cost overflows 64-bit range"
    return big


def hungarian(a: Sequence[Sequence[int]]) -> tuple[list[int], list[int], list[int]]:
    """Minimum-cost perfect matching of a square matrix.

    Returns ``(matching, u, v)`` where ``matching[i]`` is the column of row i.
    """
    n = len(a)
    INF = float("inf")
    u = [0] * (n + 1)
    v = [0] * (n + 1)
    p = [0] * (n + 1)  # p[j]: row matched to column j, 1-based, 0 = free
    way = [0] * (n + 1)
    cols = range(1, n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            row = a[i0 - 1]
            ui0 = u[i0]
            delta = INF
            j1 = 0
            for j in cols:
                if not used[j]:
                    cur = row[j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    matching = [0] * n
    for j in cols:
        matching[p[j] - 1] = j - 1
    return matching, u[1:], v[1:]


def solve_assignment(cost: Sequence[Sequence[int]],
                     forbidden: Iterable[tuple[int, int]] = ()) -> AssignmentResult:
    n = len(cost)
    if any(len(row) != n for row in cost):
        raise ValueError("cost matrix must be square")
    if n == 0:
        return AssignmentResult(0, [], [], [], [])
    big = sentinel_cost(cost)
    a = [list(row) for row in cost]
    banned = set(forbidden)
    for i, j in banned:
        a[i][j] = big
    matching, u, v = hungarian(a)
    if any((i, matching[i]) in banned for i in range(n)):
        raise Infeasible("no perfect matching avoids the forbidden pairs")
    value = sum(cost[i][matching[i]] for i in range(n))
    reduced = [[a[i][j] - u[i] - v[j] for j in range(n)] for i in range(n)]
    return AssignmentResult(value, matching, u, v, reduced)
