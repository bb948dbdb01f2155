"""Symmetric TSP: TSPLIB I/O, an exact small-instance oracle and the CP model.

The model uses one successor variable ``next[i]`` per city with an
alldifferent constraint, subtour elimination and an assignment-relaxation
bound. Values are ranked by the reduced costs of the assignment relaxation
solved on the current domains.
"""

from __future__ import annotations

import itertools
import os
from collections import OrderedDict
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np

from .assignment import AssignmentResult, hungarian
from .csp import Problem
from .propagators import AllDifferent, NoSubtour, ObjectiveBound, ReducedCostFilter
from .ranking import RankedValues, rank_sorted

SUPPORTED_FORMATS = ("FULL_MATRIX", "LOWER_DIAG_ROW", "UPPER_ROW", "UPPER_DIAG_ROW")

# published optima of the bundled instances
KNOWN_OPTIMA = {"gr17": 2085, "gr21": 2707, "gr24": 1272, "fri26": 937}


class InstanceError(ValueError):
    pass


@dataclass
class TspInstance:
    name: str
    n: int
    dist: list[list[int]]

    def __post_init__(self):
        if len(self.dist) != self.n or any(len(r) != self.n for r in self.dist):
            raise InstanceError(f"{self.name}: distance matrix is not {self.n}x{self.n}")
        for i in range(self.n):
            for j in range(i):
                if self.dist[i][j] != self.dist[j][i]:
                    raise InstanceError(f"{self.name}: asymmetric distance at ({i}, {j})")
                if self.dist[i][j] < 0:
                    raise InstanceError(f"{self.name}: negative distance at ({i}, {j})")


def _fill(fmt: str, n: int, numbers: list[int]) -> list[list[int]]:
    d = [[0] * n for _ in range(n)]
    if fmt == "FULL_MATRIX":
        pairs = ((i, j) for i in range(n) for j in range(n))
    elif fmt == "LOWER_DIAG_ROW":
        pairs = ((i, j) for i in range(n) for j in range(i + 1))
    elif fmt == "UPPER_ROW":
        pairs = ((i, j) for i in range(n) for j in range(i + 1, n))
    else:
        pairs = ((i, j) for i in range(n) for j in range(i, n))
    pairs = list(pairs)
    if len(numbers) != len(pairs):
        raise InstanceError(f"{fmt} with DIMENSION {n} needs {len(pairs)} weights, got {len(numbers)}")
    for (i, j), w in zip(pairs, numbers):
        d[i][j] = w
        if fmt != "FULL_MATRIX":
            d[j][i] = w
    return d


def loads_tsplib(text: str, name: str = "") -> TspInstance:
    spec: dict[str, str] = {}
    numbers: list[int] = []
    in_weights = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        head = line.split(":", 1)[0].strip() if ":" in line else line.split()[0]
        if head.isupper() and not head[0].isdigit() and not head.startswith("-"):
            in_weights = head == "EDGE_WEIGHT_SECTION"
            if in_weights:
                continue
            if head.endswith("_SECTION"):
                raise InstanceError(f"line {lineno}: unsupported section {head}")
            if ":" not in line:
                raise InstanceError(f"line {lineno}: expected 'KEY: value', got {line!r}")
            spec[head] = line.split(":", 1)[1].strip()
            continue
        if not in_weights:
            raise InstanceError(f"line {lineno}: data outside EDGE_WEIGHT_SECTION")
        for tok in line.split():
            try:
                numbers.append(int(tok))
            except ValueError:
                try:
                    f = float(tok)
                except ValueError:
                    raise InstanceError(f"line {lineno}: malformed weight {tok!r}") from None
                if f != int(f):
                    raise InstanceError(f"line {lineno}: non-integer weight {tok!r}")
                numbers.append(int(f))
    if spec.get("TYPE", "TSP").split()[0] != "TSP":
        raise InstanceError(f"unsupported TYPE {spec['TYPE']}")
    if spec.get("EDGE_WEIGHT_TYPE") != "EXPLICIT":
        raise InstanceError(f"unsupported EDGE_WEIGHT_TYPE {spec.get('EDGE_WEIGHT_TYPE')}")
    fmt = spec.get("EDGE_WEIGHT_FORMAT")
    if fmt not in SUPPORTED_FORMATS:
        raise InstanceError(f"unsupported EDGE_WEIGHT_FORMAT {fmt}")
    try:
        n = int(spec["DIMENSION"])
    except (KeyError, ValueError):
        raise InstanceError("missing or malformed DIMENSION") from None
    return TspInstance(spec.get("NAME", name), n, _fill(fmt, n, numbers))


def parse_tsplib(path: str | os.PathLike) -> TspInstance:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return loads_tsplib(text, os.path.splitext(os.path.basename(path))[0])


def dumps_tsplib(inst: TspInstance, fmt: str = "FULL_MATRIX") -> str:
    if fmt not in SUPPORTED_FORMATS:
        raise InstanceError(f"unsupported EDGE_WEIGHT_FORMAT {fmt}")
    n, d = inst.n, inst.dist
    lines = [f"NAME: {inst.name}", "TYPE: TSP", f"DIMENSION: {n}",
             "EDGE_WEIGHT_TYPE: EXPLICIT", f"EDGE_WEIGHT_FORMAT: {fmt}", "EDGE_WEIGHT_SECTION"]
    for i in range(n):
        if fmt == "FULL_MATRIX":
            row = d[i]
        elif fmt == "LOWER_DIAG_ROW":
            row = d[i][:i + 1]
        elif fmt == "UPPER_ROW":
            row = d[i][i + 1:]
        else:
            row = d[i][i:]
        if row:
            lines.append(" ".join(map(str, row)))
    lines.append("EOF")
    return "\n".join(lines) + "\n"


def emit_tsplib(inst: TspInstance, path: str | os.PathLike, fmt: str = "FULL_MATRIX") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_tsplib(inst, fmt))


TSPLIB_DIR_ENV = "DBSEARCH_TSPLIB_DIR"


def bundled_instance(name: str) -> TspInstance:
    """Load ``name.tsp`` from ``$DBSEARCH_TSPLIB_DIR`` if set, else from the package data."""
    extra = os.environ.get(TSPLIB_DIR_ENV)
    if extra:
        path = os.path.join(extra, f"{name}.tsp")
        if os.path.isfile(path):
            return parse_tsplib(path)
    ref = resources.files("dbsearch") / "data" / f"{name}.tsp"
    if not ref.is_file():
        where = f" (also looked in ${TSPLIB_DIR_ENV}={extra})" if extra else ""
        raise FileNotFoundError(f"no bundled instance {name}{where}")
    return loads_tsplib(ref.read_text(encoding="utf-8"), name)


# oracles


def tour_length(dist: Sequence[Sequence[int]], tour: Sequence[int]) -> int:
    return sum(dist[tour[i]][tour[(i + 1) % len(tour)]] for i in range(len(tour)))


def successors_to_tour(succ: Sequence[int]) -> list[int]:
    """Follow successor links from city 0; raises ValueError unless they form one cycle."""
    n = len(succ)
    tour, seen, city = [], set(), 0
    for _ in range(n):
        if city in seen:
            break
        seen.add(city)
        tour.append(city)
        city = succ[city]
    if len(tour) != n or city != 0 or sorted(succ) != list(range(n)):
        raise ValueError(f"successors {list(succ)} do not form a Hamiltonian cycle")
    return tour


def brute_force_tsp(dist: Sequence[Sequence[int]]) -> int:
    n = len(dist)
    if n <= 3:
        return tour_length(dist, list(range(n)))
    return min(tour_length(dist, (0,) + perm) for perm in itertools.permutations(range(1, n))
               if perm[0] < perm[-1])


def held_karp(dist: Sequence[Sequence[int]] | TspInstance) -> int:
    """Exact symmetric TSP optimum by dynamic programming over subsets."""
    if isinstance(dist, TspInstance):
        dist = dist.dist
    n = len(dist)
    if n > 20:
        raise ValueError(f"Held-Karp limited to 20 cities (2^n n memory), got {n}")
    if n <= 3:
        return tour_length(dist, list(range(n)))
    d = np.asarray(dist, dtype=np.int64)
    m = n - 1  # cities 1..n-1 are bits 0..m-1
    inf = np.iinfo(np.int64).max // 4
    size = 1 << m
    dp = np.full((size, m), inf, dtype=np.int64)
    for j in range(m):
        dp[1 << j, j] = d[0, j + 1]
    masks = np.arange(size)
    popcount = np.array([bin(x).count("1") for x in range(size)]) if m <= 12 else \
        np.unpackbits(masks.astype(">u4").view(np.uint8).reshape(-1, 4), axis=1).sum(axis=1)
    sub = d[1:, 1:]
    for s in range(1, m):
        layer = masks[popcount == s]
        for j in range(m):
            src = layer[(layer >> j) & 1 == 0]
            if src.size == 0:
                continue
            cand = (dp[src] + sub[:, j][None, :]).min(axis=1)
            dst = src | (1 << j)
            dp[dst, j] = np.minimum(dp[dst, j], cand)
    full = size - 1
    return int((dp[full] + d[1:, 0]).min())


# CP model


class TspModel:
    """Successor-variable model of one instance."""

    def __init__(self, inst: TspInstance, cache_size: int = 256, cost_filter: bool = True):
        self.inst = inst
        n = inst.n
        self.n = n
        self.dist = inst.dist
        self.big = 1 + n * max(max(r) for r in inst.dist)
        assert self.big < 2**62
        self._cache: OrderedDict[tuple[int, ...], AssignmentResult | None] = OrderedDict()
        self._cache_size = cache_size
        self.relaxations_solved = 0
        xs = list(range(n))
        constraints = [AllDifferent(xs), NoSubtour(xs), ObjectiveBound(xs, self.lower_bound)]
        if cost_filter:
            constraints.append(ReducedCostFilter(xs, self.relaxation))
        self.problem = Problem(
            [[j for j in range(n) if j != i] for i in range(n)],
            constraints,
            objective=self.cost,
            names=[f"next{i}" for i in range(n)],
        )

    def cost(self, succ: Sequence[int]) -> int:
        return sum(self.dist[i][succ[i]] for i in range(self.n))

    def relaxation(self, problem: Problem) -> AssignmentResult | None:
        """Assignment relaxation restricted to the current successor domains."""
        key = tuple(problem.dom)
        cache = self._cache
        if key in cache:
            cache.move_to_end(key)
            return cache[key]
        n, big, dist = self.n, self.big, self.dist
        a = []
        for i in range(n):
            m = key[i]
            row = dist[i]
            a.append([row[j] if m >> j & 1 else big for j in range(n)])
        matching, u, v = hungarian(a)
        self.relaxations_solved += 1
        if any(a[i][matching[i]] >= big for i in range(n)):
            result = None
        else:
            value = sum(a[i][matching[i]] for i in range(n))
            reduced = [[a[i][j] - u[i] - v[j] for j in range(n)] for i in range(n)]
            result = AssignmentResult(value, matching, u, v, reduced)
        cache[key] = result
        if len(cache) > self._cache_size:
            cache.popitem(last=False)
        return result

    def lower_bound(self, problem: Problem) -> int | None:
        r = self.relaxation(problem)
        return None if r is None else r.optimal_value

    def evaluator(self, problem: Problem, var: int) -> RankedValues:
        r = self.relaxation(problem)
        values = problem.values(var)
        if r is None:
            return [(v, -self.dist[var][v]) for v in values]
        row = r.reduced_costs[var]
        return rank_sorted((v, -row[v]) for v in values)

    def tour(self, succ: Sequence[int]) -> list[int]:
        return successors_to_tour(succ)


def verify_tour(inst: TspInstance, succ: Sequence[int]) -> int:
    """Independent check of a successor solution; returns its length."""
    tour = successors_to_tour(succ)
    return tour_length(inst.dist, tour)
