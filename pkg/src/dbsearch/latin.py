"""Partial latin square completion: instances, generator and CP model.

Text format: the first line holds the order ``n``; the next ``n`` lines hold
``n`` whitespace-separated integers each, with ``0`` marking a hole.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .csp import Problem
from .propagators import AllDifferent
from .ranking import RankedValues, rank_occurrence
from .tsp import InstanceError


@dataclass
class PlsInstance:
    order: int
    grid: list[list[int]]
    balanced: bool = False
    name: str = ""

    def __post_init__(self):
        n = self.order
        if n < 1 or len(self.grid) != n or any(len(r) != n for r in self.grid):
            raise InstanceError(f"grid is not {n}x{n}")
        for r in range(n):
            for c in range(n):
                v = self.grid[r][c]
                if not 0 <= v <= n:
                    raise InstanceError(f"cell ({r}, {c}) holds {v}, outside 0..{n}")
        _check_no_duplicates(self.grid)

    @property
    def holes(self) -> int:
        return sum(v == 0 for row in self.grid for v in row)

    def hole_cells(self) -> list[tuple[int, int]]:
        return [(r, c) for r in range(self.order) for c in range(self.order) if self.grid[r][c] == 0]


def _check_no_duplicates(grid: Sequence[Sequence[int]]) -> None:
    n = len(grid)
    for r in range(n):
        seen: dict[int, int] = {}
        for c in range(n):
            v = grid[r][c]
            if v and v in seen:
                raise InstanceError(f"row {r}: symbol {v} repeated at columns {seen[v]} and {c}")
            seen[v] = c
    for c in range(n):
        seen = {}
        for r in range(n):
            v = grid[r][c]
            if v and v in seen:
                raise InstanceError(f"column {c}: symbol {v} repeated at rows {seen[v]} and {r}")
            seen[v] = r


def loads_pls(text: str, name: str = "") -> PlsInstance:
    rows: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = raw.split()
        if toks:
            rows.append((lineno, toks))
    if not rows:
        raise InstanceError("empty PLS file")
    lineno, head = rows[0]
    if len(head) != 1 or not head[0].isdigit():
        raise InstanceError(f"line {lineno}: expected the order, got {' '.join(head)!r}")
    n = int(head[0])
    if len(rows) - 1 != n:
        raise InstanceError(f"order {n} needs {n} grid rows, found {len(rows) - 1}")
    grid = []
    for lineno, toks in rows[1:]:
        if len(toks) != n:
            raise InstanceError(f"line {lineno}: expected {n} cells, got {len(toks)}")
        try:
            grid.append([int(t) for t in toks])
        except ValueError:
            raise InstanceError(f"line {lineno}: malformed cell in {' '.join(toks)!r}") from None
    return PlsInstance(n, grid, name=name)


def parse_pls(path: str | os.PathLike) -> PlsInstance:
    with open(path, encoding="utf-8") as fh:
        return loads_pls(fh.read(), os.path.splitext(os.path.basename(path))[0])


def dumps_pls(inst: PlsInstance) -> str:
    width = len(str(inst.order))
    lines = [str(inst.order)]
    lines += [" ".join(str(v).rjust(width) for v in row) for row in inst.grid]
    return "\n".join(lines) + "\n"


def emit_pls(inst: PlsInstance, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_pls(inst))


def verify_latin(grid: Sequence[Sequence[int]], given: PlsInstance | None = None) -> None:
    """Raise ValueError unless ``grid`` is a complete latin square extending ``given``."""
    n = len(grid)
    full = set(range(1, n + 1))
    for r, row in enumerate(grid):
        if len(row) != n or set(row) != full:
            raise ValueError(f"row {r} is not a permutation of 1..{n}")
    for c in range(n):
        if {grid[r][c] for r in range(n)} != full:
            raise ValueError(f"column {c} is not a permutation of 1..{n}")
    if given is not None:
        if given.order != n:
            raise ValueError("order mismatch")
        for r in range(n):
            for c in range(n):
                if given.grid[r][c] and given.grid[r][c] != grid[r][c]:
                    raise ValueError(f"cell ({r}, {c}) changes the pre-filled symbol")


# generation


def _jacobson_matthews(square: np.ndarray, rng: np.random.Generator, steps: int) -> np.ndarray:
    """Random walk on latin squares via +-1 incidence cube moves."""
    n = square.shape[0]
    cube = np.zeros((n, n, n), dtype=np.int8)
    r_idx, c_idx = np.indices((n, n))
    cube[r_idx, c_idx, square] = 1
    improper = None
    done = 0
    while done < steps or improper is not None:
        if improper is None:
            while True:
                r, c, s = (int(x) for x in rng.integers(0, n, size=3))
                if cube[r, c, s] == 0:
                    break
            r1 = int(np.flatnonzero(cube[:, c, s] == 1)[0])
            c1 = int(np.flatnonzero(cube[r, :, s] == 1)[0])
            s1 = int(np.flatnonzero(cube[r, c, :] == 1)[0])
        else:
            r, c, s = improper
            r1 = int(rng.choice(np.flatnonzero(cube[:, c, s] == 1)))
            c1 = int(rng.choice(np.flatnonzero(cube[r, :, s] == 1)))
            s1 = int(rng.choice(np.flatnonzero(cube[r, c, :] == 1)))
        cube[r, c, s] += 1
        cube[r, c1, s1] += 1
        cube[r1, c, s1] += 1
        cube[r1, c1, s] += 1
        cube[r, c, s1] -= 1
        cube[r, c1, s] -= 1
        cube[r1, c, s] -= 1
        cube[r1, c1, s1] -= 1
        improper = (r1, c1, s1) if cube[r1, c1, s1] < 0 else None
        done += 1
    return cube.argmax(axis=2)


def random_latin_square(order: int, rng: np.random.Generator, steps: int | None = None) -> np.ndarray:
    """0-based random latin square: permuted cyclic square plus mixing moves."""
    n = order
    base = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    square = base[rng.permutation(n)][:, rng.permutation(n)]
    square = rng.permutation(n)[square]
    if n >= 3:
        square = _jacobson_matthews(square, rng, n ** 3 if steps is None else steps)
    return square


def balanced_hole_mask(order: int, holes: int, rng: np.random.Generator) -> np.ndarray:
    """0/1 matrix with ``holes`` ones whose row and column sums differ by at most one."""
    n = order
    q, rem = divmod(holes, n)
    # a circulant band gives row sums q or q+1 and column sums q or q+1
    mask = np.zeros((n, n), dtype=np.int8)
    k = 0
    for d in range(q + (1 if rem else 0)):
        for r in range(n):
            if k >= holes:
                break
            mask[r, (r + d) % n] = 1
            k += 1
    # degree-preserving 2x2 swaps randomize the pattern
    for _ in range(20 * max(holes, 1)):
        r1, r2 = rng.integers(0, n, size=2)
        c1, c2 = rng.integers(0, n, size=2)
        if mask[r1, c1] and mask[r2, c2] and not mask[r1, c2] and not mask[r2, c1]:
            mask[r1, c1] = mask[r2, c2] = 0
            mask[r1, c2] = mask[r2, c1] = 1
    return mask


def generate_pls(order: int, holes: int, balanced: bool = True, seed: int = 0) -> PlsInstance:
    if order < 1:
        raise ValueError("order must be positive")
    if not 0 <= holes <= order * order:
        raise ValueError(f"holes must lie in 0..{order * order}, got {holes}")
    rng = np.random.default_rng(seed)
    square = random_latin_square(order, rng) + 1
    if balanced:
        mask = balanced_hole_mask(order, holes, rng)
        lo, hi = holes // order, -(-holes // order)
        for sums in (mask.sum(axis=1), mask.sum(axis=0)):
            if sums.min() < lo or sums.max() > hi:
                raise ValueError(f"could not balance {holes} holes over order {order}")
    else:
        mask = np.zeros(order * order, dtype=np.int8)
        mask[rng.choice(order * order, size=holes, replace=False)] = 1
        mask = mask.reshape(order, order)
    grid = np.where(mask == 1, 0, square)
    kind = "bpls" if balanced else "pls"
    return PlsInstance(order, grid.tolist(), balanced=balanced,
                       name=f"{kind}.order{order}.holes{holes}.seed{seed}")


# CP model


class PlsModel:
    """One variable per hole; alldifferent over the holes of each row and column.

    Values rank by how often the symbol already occurs in the filled cells
    (pre-filled or fixed by search), most frequent first.
    """

    def __init__(self, inst: PlsInstance):
        self.inst = inst
        n = inst.order
        self.cells = inst.hole_cells()
        grid = inst.grid
        row_used = [{v for v in grid[r] if v} for r in range(n)]
        col_used = [{grid[r][c] for r in range(n) if grid[r][c]} for c in range(n)]
        domains = [[v for v in range(1, n + 1) if v not in row_used[r] and v not in col_used[c]]
                   for r, c in self.cells]
        self.base_counts = [0] * (n + 1)
        for row in grid:
            for v in row:
                if v:
                    self.base_counts[v] += 1
        by_row: dict[int, list[int]] = {}
        by_col: dict[int, list[int]] = {}
        for i, (r, c) in enumerate(self.cells):
            by_row.setdefault(r, []).append(i)
            by_col.setdefault(c, []).append(i)
        constraints = [AllDifferent(xs) for xs in list(by_row.values()) + list(by_col.values())
                       if len(xs) > 1]
        self.problem = Problem(domains, constraints,
                               names=[f"cell{r}_{c}" for r, c in self.cells])

    def counts(self, problem: Problem) -> dict[int, int]:
        counts = list(self.base_counts)
        for m in problem.dom:
            if m & (m - 1) == 0:
                counts[m.bit_length() - 1] += 1
        return dict(enumerate(counts))

    def evaluator(self, problem: Problem, var: int) -> RankedValues:
        counts = self.counts(problem)
        m = problem.dom[var]
        if m & (m - 1) == 0:
            # the cell being ranked is not yet part of the square
            counts[m.bit_length() - 1] -= 1
        return rank_occurrence(counts, problem.values(var))

    def grid(self, values: Sequence[int]) -> list[list[int]]:
        out = [list(row) for row in self.inst.grid]
        for (r, c), v in zip(self.cells, values):
            out[r][c] = v
        return out
