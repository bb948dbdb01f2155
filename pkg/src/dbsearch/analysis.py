"""Exact success probabilities of DBS and LDS on an ordered b-ary tree.

The tree has depth ``n`` and branch width ``b``; branch ``j`` (0-based label
``j``, 0 = heuristically best) leads to success with probability
``p[j]``, independently of depth. A leaf reached through labels
``(l_1, ..., l_n)`` therefore has mass ``prod(p[l_i])``.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

TOL = 1e-12


@dataclass(frozen=True)
class ProbabilityModel:
    b: int
    n: int
    p: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        if self.b < 1 or self.n < 1:
            raise ValueError("b and n must be positive")
        if len(self.p) != self.b:
            raise ValueError(f"expected {self.b} probabilities, got {len(self.p)}")
        if any(x < 0 for x in self.p):
            raise ValueError("probabilities must be non-negative")
        if any(self.p[i] < self.p[i + 1] for i in range(self.b - 1)):
            raise ValueError("probabilities must be sorted non-increasing")
        if abs(math.fsum(self.p) - 1.0) > TOL:
            raise ValueError(f"probabilities sum to {math.fsum(self.p)}, not 1")

    @classmethod
    def normalized(cls, weights: Sequence[float], n: int) -> "ProbabilityModel":
        w = sorted((float(x) for x in weights), reverse=True)
        total = math.fsum(w)
        if total <= 0:
            raise ValueError("weights carry no mass")
        return cls(len(w), n, tuple(x / total for x in w))

    def leaf_mass(self, labels: Sequence[int]) -> float:
        return math.prod(self.p[j] for j in labels)

    def plateau_size(self) -> int:
        """Number of leading branches sharing the best probability."""
        c = 1
        while c < self.b and self.p[c] == self.p[0]:
            c += 1
        return c

    def strictly_decreasing(self) -> bool:
        return all(self.p[i] > self.p[i + 1] for i in range(self.b - 1))


@dataclass(frozen=True)
class PartitionSet:
    """All label paths of a given discrepancy, grouped by multiset.

    ``entries`` holds ``(parts, multiplicity)`` with ``parts`` sorted in
    decreasing order; the multiplicity is the number of distinct orderings.
    """

    k: int
    n: int
    b: int
    entries: tuple[tuple[tuple[int, ...], int], ...]

    @property
    def leaf_count(self) -> int:
        return sum(mu for _, mu in self.entries)

    def compositions(self) -> Iterable[tuple[int, ...]]:
        for parts, _ in self.entries:
            yield from sorted(set(itertools.permutations(parts)))


def _multiplicity(parts: Sequence[int]) -> int:
    mu = math.factorial(len(parts))
    for count in Counter(parts).values():
        mu //= math.factorial(count)
    return mu


def _multisets(k: int, n: int, hi: int) -> Iterable[tuple[int, ...]]:
    # non-increasing tuples of length n, entries in 0..hi, summing to k
    if n == 0:
        if k == 0:
            yield ()
        return
    if k > n * hi:
        return
    for first in range(min(hi, k), -1, -1):
        if first * n < k:
            break
        for rest in _multisets(k - first, n - 1, first):
            yield (first,) + rest


def enumerate_partitions(k: int, n: int, b: int) -> PartitionSet:
    if not 0 <= k <= n * (b - 1):
        raise ValueError(f"discrepancy {k} outside 0..{n * (b - 1)}")
    entries = tuple((parts, _multiplicity(parts)) for parts in _multisets(k, n, b - 1))
    return PartitionSet(k, n, b, entries)


def max_discrepancy(model: ProbabilityModel) -> int:
    return model.n * (model.b - 1)


def prob_dbs(c: int, model: ProbabilityModel) -> float:
    """Success probability of the first DBS subproblem with best cells of size c."""
    if not 1 <= c <= model.b:
        raise ValueError(f"c={c} outside 1..{model.b}")
    return math.fsum(model.p[:c]) ** model.n


def dbs_leaves(c: int, model: ProbabilityModel) -> int:
    return c ** model.n


def prob_lds(k: int, model: ProbabilityModel) -> float:
    """Success probability of the leaves with discrepancy exactly k."""
    ps = enumerate_partitions(k, model.n, model.b)
    return math.fsum(mu * math.prod(model.p[t] for t in parts) for parts, mu in ps.entries)


def lds_leaves(k: int, model: ProbabilityModel) -> int:
    return enumerate_partitions(k, model.n, model.b).leaf_count


def prob_lds_upto(k: int, model: ProbabilityModel) -> float:
    return math.fsum(prob_lds(d, model) for d in range(k + 1))


def lds_leaves_upto(k: int, model: ProbabilityModel) -> int:
    return sum(lds_leaves(d, model) for d in range(k + 1))


# cumulative curves


def _cells(b: int, size: int) -> list[range]:
    return [range(s, min(s + size, b)) for s in range(0, b, size)]


def lds_curve(model: ProbabilityModel) -> list[tuple[int, float]]:
    points = [(0, 0.0)]
    leaves = 0
    masses = []
    for k in range(max_discrepancy(model) + 1):
        leaves += lds_leaves(k, model)
        masses.append(prob_lds(k, model))
        points.append((leaves, math.fsum(masses)))
    return points


def dbs_first_curve(model: ProbabilityModel) -> list[tuple[int, float]]:
    return [(dbs_leaves(c, model), prob_dbs(c, model)) for c in range(1, model.b + 1)]


def dbs_lds_curve(model: ProbabilityModel, size: int = 2) -> list[tuple[int, float]]:
    """DBS with cells of ``size`` values, subproblems visited in waves of
    increasing subproblem discrepancy."""
    cells = _cells(model.b, size)
    q = [math.fsum(model.p[j] for j in cell) for cell in cells]
    widths = [len(cell) for cell in cells]
    points = [(0, 0.0)]
    leaves = 0
    masses = []
    for k in range(model.n * (len(cells) - 1) + 1):
        ps = enumerate_partitions(k, model.n, len(cells))
        for parts, mu in ps.entries:
            leaves += mu * math.prod(widths[t] for t in parts)
            masses.append(mu * math.prod(q[t] for t in parts))
        points.append((leaves, math.fsum(masses)))
    return points


SCHEDULES = ("lds", "dbs_c", "dbs2_lds")


def cumulative_success(schedule: str, model: ProbabilityModel) -> list[tuple[int, float]]:
    if schedule == "lds":
        return lds_curve(model)
    if schedule == "dbs_c":
        return dbs_first_curve(model)
    if schedule == "dbs2_lds":
        return dbs_lds_curve(model, 2)
    raise ValueError(f"unknown schedule {schedule!r}; expected one of {SCHEDULES}")


def interpolate(curve: Sequence[tuple[int, float]], leaves: float) -> float:
    """Piecewise-linear evaluation of a cumulative curve."""
    xs = [x for x, _ in curve]
    if leaves <= xs[0]:
        return curve[0][1]
    if leaves >= xs[-1]:
        return curve[-1][1]
    i = next(i for i, x in enumerate(xs) if x >= leaves)
    (x0, y0), (x1, y1) = curve[i - 1], curve[i]
    if x1 == x0:
        return y1
    return y0 + (y1 - y0) * (leaves - x0) / (x1 - x0)


def compare_curves(a, b) -> list[tuple[int, float, float]]:
    """Evaluate two curves at the union of their breakpoints."""
    xs = sorted({x for x, _ in a} | {x for x, _ in b})
    return [(x, interpolate(a, x), interpolate(b, x)) for x in xs]


def brute_force_success(visitation_order: Iterable[Sequence[int]], model: ProbabilityModel,
                        ) -> list[tuple[int, float]]:
    """Cumulative success mass by direct leaf enumeration in the given order."""
    if model.b ** model.n > 10**6:
        raise ValueError(f"tree with {model.b}^{model.n} leaves is too large to enumerate")
    points = [(0, 0.0)]
    masses = []
    for i, labels in enumerate(visitation_order, 1):
        if len(labels) != model.n:
            raise ValueError(f"leaf {labels} does not have depth {model.n}")
        masses.append(model.leaf_mass(labels))
        points.append((i, math.fsum(masses)))
    return points


# distributions


@dataclass(frozen=True)
class DistributionSpec:
    family: str
    plateaus: tuple[int, int] | None = None
    slope: float = 1.0
    lam: float = 2.0
    q: float = 0.35

    def __post_init__(self):
        if self.family not in ("linear", "poisson", "binomial"):
            raise ValueError(f"unknown family {self.family!r}")


def _weights(spec: DistributionSpec, count: int) -> list[float]:
    if spec.family == "linear":
        return [spec.slope * (count - j) for j in range(count)]
    if spec.family == "poisson":
        return [math.exp(-spec.lam) * spec.lam**j / math.factorial(j) for j in range(count)]
    q = spec.q
    return [math.comb(count - 1, j) * q**j * (1 - q) ** (count - 1 - j) for j in range(count)]


def make_distribution(spec: DistributionSpec, b: int, n: int = 1) -> ProbabilityModel:
    """Branch probabilities of the given family, sorted best first.

    With ``plateaus=(count, size)`` each run of ``size`` consecutive values is
    replaced by its mean.
    """
    weights = sorted(_weights(spec, b), reverse=True)
    if spec.plateaus is not None:
        count, size = spec.plateaus
        if count * size != b:
            raise ValueError(f"{count} plateaus of size {size} do not cover {b} branches")
        weights = [math.fsum(weights[s:s + size]) / size
                   for s in range(0, b, size) for _ in range(size)]
    if math.fsum(weights) <= 0:
        raise ValueError("distribution has no mass")
    return ProbabilityModel.normalized(weights, n)


# theorem checks


@dataclass
class TheoremCheck:
    holds: bool
    lhs: float
    rhs: float
    admissible: bool = True
    equal: bool = False
    reason: str = ""
    # decided in rational arithmetic on the exact float inputs
    exact_holds: bool | None = None
    exact_equal: bool | None = None


def _exact_dbs(c: int, model: ProbabilityModel) -> Fraction:
    return sum((Fraction(x) for x in model.p[:c]), Fraction(0)) ** model.n


def _exact_lds_upto(k: int, model: ProbabilityModel) -> Fraction:
    # coefficients of (sum_t p_t x^t)^n, truncated at degree k
    branch = [Fraction(x) for x in model.p]
    poly = [Fraction(1)]
    for _ in range(model.n):
        nxt = [Fraction(0)] * min(len(poly) + len(branch) - 1, k + 1)
        for i, a in enumerate(poly):
            if a:
                for t, q in enumerate(branch):
                    if i + t > k:
                        break
                    nxt[i + t] += a * q
        poly = nxt
    return sum(poly, Fraction(0))


def check_theorem2(model: ProbabilityModel, c_tilde: int, k: int) -> TheoremCheck:
    """Mean success per leaf of the first DBS subproblem against LDS up to k."""
    c = model.plateau_size()
    if not 1 <= c_tilde <= c:
        return TheoremCheck(False, math.nan, math.nan, admissible=False,
                            reason=f"c_tilde={c_tilde} exceeds best plateau size {c}")
    if not 0 <= k <= max_discrepancy(model):
        return TheoremCheck(False, math.nan, math.nan, admissible=False,
                            reason=f"k={k} outside 0..{max_discrepancy(model)}")
    lhs = prob_dbs(c_tilde, model) / dbs_leaves(c_tilde, model)
    rhs = prob_lds_upto(k, model) / lds_leaves_upto(k, model)
    return TheoremCheck(lhs >= rhs - TOL, lhs, rhs, equal=abs(lhs - rhs) <= TOL)


def theorem3_condition(model: ProbabilityModel, c: int) -> bool:
    p_next = model.p[c] if c < model.b else 0.0
    return model.p[0] ** (model.n - 1) * p_next < model.p[c - 1] ** model.n


def check_theorem3(model: ProbabilityModel, c: int, k: int, exact: bool = False) -> TheoremCheck:
    """First DBS subproblem against LDS up to k under a leaf budget of c^n."""
    lhs = prob_dbs(c, model)
    rhs = prob_lds_upto(k, model)
    reasons = []
    if not model.strictly_decreasing():
        reasons.append("probabilities not strictly decreasing")
    if model.n <= 1:
        reasons.append("depth must exceed 1")
    if not theorem3_condition(model, c):
        reasons.append(f"p_1^(n-1) p_(c+1) >= p_c^n for c={c}")
    if lds_leaves_upto(k, model) > dbs_leaves(c, model):
        reasons.append(f"LDS up to {k} has more than {c}^{model.n} leaves")
    ok = lhs >= rhs - TOL
    chk = TheoremCheck(ok, lhs, rhs, admissible=not reasons, equal=abs(lhs - rhs) <= TOL,
                       reason="; ".join(reasons))
    if exact:
        el, er = _exact_dbs(c, model), _exact_lds_upto(k, model)
        chk.exact_holds, chk.exact_equal = el >= er, el == er
    return chk


def equality_pairs(b: int, n: int) -> list[tuple[int, int]]:
    return [(1, 0), (b - 1, n * (b - 1) - 1), (b, n * (b - 1))]


def plateau_models(b: int, n: int, rng: random.Random, per_size: int = 3):
    """Random models whose best plateau has each size 1..b."""
    for c in range(1, b + 1):
        for _ in range(per_size):
            if c == b:
                yield c, ProbabilityModel.normalized([1.0] * b, n)
                break
            top = rng.uniform(1.0, 2.0)
            tail = sorted((rng.uniform(0.01, 0.95) * top for _ in range(b - c)), reverse=True)
            yield c, ProbabilityModel.normalized([top] * c + tail, n)


def cliff_model(b: int, n: int, c: int, rng: random.Random) -> ProbabilityModel:
    """Strictly decreasing model with a near-flat head of c values and a steep drop."""
    head = [1.0 - 1e-3 * j * rng.uniform(0.5, 1.0) for j in range(c)]
    tail, x = [], head[-1] * rng.uniform(0.02, 0.2) ** n
    for _ in range(b - c):
        tail.append(x)
        x *= rng.uniform(0.3, 0.9)
    return ProbabilityModel.normalized(head + tail, n)


def strict_models(b: int, n: int, rng: random.Random, per_size: int = 2):
    for c in range(1, b + 1):
        for _ in range(per_size):
            yield cliff_model(b, n, c, rng)
    for _ in range(per_size):
        w = sorted({rng.uniform(0.01, 1.0) for _ in range(b)}, reverse=True)
        if len(w) == b:
            yield ProbabilityModel.normalized(w, n)


@dataclass
class TheoremReport:
    theorem2_points: int = 0
    theorem2_failures: list = field(default_factory=list)
    theorem3_points: int = 0
    theorem3_failures: list = field(default_factory=list)
    theorem3_strictness_failures: list = field(default_factory=list)
    equality_results: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        """Inequalities, strictness and the equality pairs inside the leaf budget."""
        eq_ok = all(r["equal"] for r in self.equality_results if r["admissible"])
        return (not self.theorem2_failures and not self.theorem3_failures
                and not self.theorem3_strictness_failures and eq_ok)


def verify_theorems(max_b: int = 6, max_n: int = 5, seed: int = 0, per_size: int = 3) -> TheoremReport:
    rng = random.Random(seed)
    report = TheoremReport()
    for b in range(2, max_b + 1):
        for n in range(2, max_n + 1):
            kmax = n * (b - 1)
            for c, model in plateau_models(b, n, rng, per_size):
                for ct in range(1, c + 1):
                    for k in range(kmax + 1):
                        chk = check_theorem2(model, ct, k)
                        report.theorem2_points += 1
                        expect_equal = k < c
                        if not chk.holds or (expect_equal and not chk.equal):
                            report.theorem2_failures.append((b, n, model.p, ct, k, chk))
            for model in strict_models(b, n, rng, per_size):
                pairs = equality_pairs(b, n)
                for c in range(1, b + 1):
                    for k in range(kmax + 1):
                        chk = check_theorem3(model, c, k, exact=True)
                        if (c, k) in pairs:
                            report.equality_results.append(
                                {"b": b, "n": n, "c": c, "k": k, "lhs": chk.lhs, "rhs": chk.rhs,
                                 "equal": chk.equal, "admissible": chk.admissible,
                                 "reason": chk.reason})
                        if not chk.admissible:
                            continue
                        report.theorem3_points += 1
                        if not (chk.holds and chk.exact_holds):
                            report.theorem3_failures.append((b, n, model.p, c, k, chk))
                        elif chk.exact_equal and (c, k) not in pairs:
                            report.theorem3_strictness_failures.append((b, n, model.p, c, k, chk))
    return report
