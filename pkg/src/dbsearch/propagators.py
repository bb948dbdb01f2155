"""Constraints used by the TSP and latin square models."""

from __future__ import annotations

from typing import Callable, Sequence

from .csp import Problem, Propagator, min_value


class NotEqual(Propagator):
    def __init__(self, x: int, y: int):
        self.scope = (x, y)

    def propagate(self, problem: Problem) -> bool:
        x, y = self.scope
        dom = problem.dom
        mx, my = dom[x], dom[y]
        if mx & (mx - 1) == 0 and my & mx:
            return problem.set_domain(y, my & ~mx)
        if my & (my - 1) == 0 and mx & my:
            return problem.set_domain(x, mx & ~my)
        return True


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low
        mask ^= low


class AllDifferent(Propagator):
    """Hyper-arc consistent alldifferent.

    Values taken by fixed variables are first removed from the others. The
    remaining variables are matched into their values, and an edge
    ``(x, v)`` survives only if it lies on the matching, on an alternating
    cycle (same strongly connected component), or on an even alternating path
    from a free value.
    """

    def __init__(self, scope: Sequence[int]):
        self.scope = tuple(scope)
        if len(set(self.scope)) != len(self.scope):
            raise ValueError("alldifferent scope has repeated variables")
        self._match: dict[int, int] = {}  # var -> value bit, kept between calls

    def propagate(self, problem: Problem) -> bool:
        dom = problem.dom
        # singleton pass
        free_vars = list(self.scope)
        taken = 0
        changed = True
        while changed:
            changed = False
            rest = []
            for x in free_vars:
                m = dom[x]
                if m & (m - 1) == 0:
                    if m & taken:
                        return False
                    taken |= m
                    changed = True
                else:
                    rest.append(x)
            if changed:
                for x in rest:
                    m = dom[x]
                    if m & taken:
                        if not problem.set_domain(x, m & ~taken):
                            return False
            free_vars = rest
        if len(free_vars) < 2:
            return True
        return self._regin(problem, free_vars)

    def _regin(self, problem: Problem, xs: list[int]) -> bool:
        dom = problem.dom
        k = len(xs)
        doms = [dom[x] for x in xs]
        union = 0
        for m in doms:
            union |= m
        if union.bit_count() < k:
            return False

        # matching: mate[i] = value bit of xs[i], owner[bit] = i
        old = self._match
        mate = [0] * k
        owner: dict[int, int] = {}
        for i, x in enumerate(xs):
            b = old.get(x, 0)
            if b and doms[i] & b and b not in owner:
                mate[i] = b
                owner[b] = i
        for i in range(k):
            if not mate[i] and not self._augment(i, doms, mate, owner):
                return False
        self._match = {x: mate[i] for i, x in enumerate(xs)}

        # var graph as bitsets: bit j of adj[i] set when x_i can take mate(x_j)
        matched = 0
        for b in mate:
            matched |= b
        free_vals = union & ~matched
        rng = range(k)
        adj = [0] * k
        for i in rng:
            d = doms[i] & ~mate[i]
            if d & matched:
                a = 0
                for j in rng:
                    if d & mate[j]:
                        a |= 1 << j
                adj[i] = a

        # transitive closure, reflexive
        reach = [adj[i] | (1 << i) for i in rng]
        for m in rng:
            bit = 1 << m
            rm = reach[m]
            for i in rng:
                if reach[i] & bit:
                    reach[i] |= rm

        # vars whose mate can be swapped for a free value
        to_free = 0
        for i in rng:
            if doms[i] & free_vals:
                to_free |= 1 << i
        free_ok = 0
        for j in rng:
            if reach[j] & to_free:
                free_ok |= mate[j]

        # (i, mate(j)) survives when j reaches i: the edge closes an alternating cycle
        keep_common = free_vals | free_ok
        for i, x in enumerate(xs):
            bit = 1 << i
            keep = mate[i] | keep_common
            d = doms[i] & ~keep
            for j in rng:
                if d & mate[j] and reach[j] & bit:
                    keep |= mate[j]
            new = doms[i] & keep
            if new != doms[i]:
                problem.set_domain(x, new)
        return True

    @staticmethod
    def _augment(root: int, doms, mate, owner) -> bool:
        # iterative Kuhn search for an augmenting path from var root
        visited = 0
        parent_var: dict[int, int] = {}  # value bit -> var that reached it
        frontier = [root]
        while frontier:
            nxt = []
            for i in frontier:
                cand = doms[i] & ~visited
                for b in _bits(cand):
                    visited |= b
                    parent_var[b] = i
                    j = owner.get(b)
                    if j is None:
                        # flip along the path back to root
                        while True:
                            i = parent_var[b]
                            prev = mate[i]
                            mate[i] = b
                            owner[b] = i
                            if i == root:
                                return True
                            b = prev
                    nxt.append(j)
            frontier = nxt
        return False


class NoSubtour(Propagator):
    """Successor variables ``next[i]`` must form one Hamiltonian cycle.

    For every chain of fixed arcs from ``s`` to ``e`` covering fewer than
    ``n - 1`` arcs, the arc ``e -> s`` is removed.
    """

    idempotent = False

    def __init__(self, succ_vars: Sequence[int]):
        self.scope = tuple(succ_vars)
        self.n = len(self.scope)

    def propagate(self, problem: Problem) -> bool:
        dom = problem.dom
        n = self.n
        xs = self.scope
        succ = [-1] * n
        has_pred = [False] * n
        for i in range(n):
            m = dom[xs[i]]
            if m & (m - 1) == 0:
                j = min_value(m)
                succ[i] = j
                has_pred[j] = True
        seen = [False] * n
        removals = []
        for s in range(n):
            if has_pred[s]:
                continue
            e, length = s, 0
            seen[s] = True
            while succ[e] >= 0:
                e = succ[e]
                seen[e] = True
                length += 1
            if length < n - 1:
                removals.append((e, s))
        # nodes off every chain lie on cycles of fixed arcs
        for s in range(n):
            if not seen[s]:
                length, e = 0, s
                while not seen[e]:
                    seen[e] = True
                    e = succ[e]
                    length += 1
                if length < n:
                    return False
        for e, s in removals:
            if not problem.remove(xs[e], s):
                return False
        return True


class ObjectiveBound(Propagator):
    """Fails when a lower bound on the residual cost reaches the incumbent.

    ``lower_bound(problem)`` returns a bound valid for every completion of
    the current domains, or None when no completion exists.
    """

    priority = 1

    def __init__(self, scope: Sequence[int], lower_bound: Callable[[Problem], int | None]):
        self.scope = tuple(scope)
        self.lower_bound = lower_bound

    def propagate(self, problem: Problem) -> bool:
        if problem.incumbent is None:
            return True
        lb = self.lower_bound(problem)
        if lb is None:
            return False
        return lb < problem.incumbent


class ReducedCostFilter(Propagator):
    """Removes arc values whose reduced cost lifts the bound to the incumbent.

    ``relaxation(problem)`` returns an object with ``optimal_value`` and a
    ``reduced_costs`` matrix (row per variable, column per value), or None
    when the relaxation is infeasible. Every completion using value ``v``
    for variable ``x`` costs at least ``optimal_value + reduced_costs[x][v]``.
    """

    priority = 1

    def __init__(self, scope: Sequence[int], relaxation: Callable[[Problem], object | None]):
        self.scope = tuple(scope)
        self.relaxation = relaxation

    def propagate(self, problem: Problem) -> bool:
        inc = problem.incumbent
        if inc is None:
            return True
        r = self.relaxation(problem)
        if r is None:
            return False
        slack = inc - r.optimal_value
        if slack <= 0:
            return False
        dom = problem.dom
        for i, x in enumerate(self.scope):
            m = dom[x]
            row = r.reduced_costs[i]
            drop = 0
            rest = m
            while rest:
                low = rest & -rest
                rest ^= low
                if row[low.bit_length() - 1] >= slack:
                    drop |= low
            if drop and not problem.set_domain(x, m & ~drop):
                return False
        return True
