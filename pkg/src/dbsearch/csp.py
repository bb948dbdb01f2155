"""Finite-domain CSP state with trailing and a propagation fixpoint loop.

Domains are stored as Python integers used as bitsets: bit ``v`` is set when
value ``v`` is still in the domain. All changes go through
:meth:`Problem.set_domain`, which records the previous bitset on the trail so
that :meth:`Problem.restore` can rewind to any saved level.
"""

from __future__ import annotations

from collections import deque
from typing import Callable, Iterable, Sequence


def mask_of(values: Iterable[int]) -> int:
    mask = 0
    for v in values:
        if v < 0:
            raise ValueError(f"domain values must be non-negative, got {v}")
        mask |= 1 << v
    return mask


def values_of(mask: int) -> list[int]:
    """Values of a bitset in increasing order."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def min_value(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


class Domain:
    """Read-only view of one variable's domain."""

    __slots__ = ("mask", "initial_size")

    def __init__(self, mask: int, initial_size: int):
        self.mask = mask
        self.initial_size = initial_size

    @property
    def values(self) -> list[int]:
        return values_of(self.mask)

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __contains__(self, value: int) -> bool:
        return value >= 0 and bool(self.mask >> value & 1)

    def __iter__(self):
        return iter(values_of(self.mask))

    def __repr__(self) -> str:
        return f"Domain({self.values})"


class Propagator:
    """Base class for constraints.

    Subclasses set ``scope`` and implement :meth:`propagate`, which narrows
    domains through ``problem.set_domain`` and returns False on failure.
    ``priority`` 0 runs before priority 1 (expensive global checks).
    """

    scope: tuple[int, ...] = ()
    priority = 0
    idempotent = True

    def propagate(self, problem: "Problem") -> bool:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}(scope={list(self.scope)})"


class Problem:
    """Variables, domains and constraints plus the trail.

    ``objective`` is an optional callable mapping a complete assignment (list
    of values) to a cost to be minimized. ``incumbent`` holds the best cost
    found so far and is read by bounding propagators.
    """

    def __init__(
        self,
        domains: Sequence[Iterable[int]],
        constraints: Sequence[Propagator] = (),
        objective: Callable[[list[int]], int] | None = None,
        names: Sequence[str] | None = None,
    ):
        self.dom: list[int] = [mask_of(d) for d in domains]
        self.initial_sizes = [m.bit_count() for m in self.dom]
        self.n = len(self.dom)
        self.names = list(names) if names is not None else [f"x{i}" for i in range(self.n)]
        self.objective = objective
        self.incumbent: int | None = None
        self.constraints: list[Propagator] = []
        self.watchers: list[list[Propagator]] = [[] for _ in range(self.n)]
        self._trail: list[tuple[int, int]] = []
        self._levels: list[int] = []
        self._queues = (deque(), deque())
        self._queued: set[int] = set()
        self._running: Propagator | None = None
        for c in constraints:
            self.add(c)

    def add(self, constraint: Propagator) -> None:
        for v in constraint.scope:
            if not 0 <= v < self.n:
                raise ValueError(f"{constraint!r} references unknown variable {v}")
        self.constraints.append(constraint)
        for v in set(constraint.scope):
            self.watchers[v].append(constraint)

    # domain access

    def domain(self, var: int) -> Domain:
        return Domain(self.dom[var], self.initial_sizes[var])

    def values(self, var: int) -> list[int]:
        return values_of(self.dom[var])

    def size(self, var: int) -> int:
        return self.dom[var].bit_count()

    def is_fixed(self, var: int) -> bool:
        m = self.dom[var]
        return m != 0 and m & (m - 1) == 0

    def value(self, var: int) -> int:
        return min_value(self.dom[var])

    def all_fixed(self) -> bool:
        return all(m & (m - 1) == 0 for m in self.dom)

    def assignment(self) -> list[int]:
        return [min_value(m) for m in self.dom]

    def snapshot(self) -> tuple[int, ...]:
        return tuple(self.dom)

    # trail

    def save(self) -> int:
        self._levels.append(len(self._trail))
        return len(self._levels) - 1

    def restore(self, level: int) -> None:
        if not 0 <= level < len(self._levels):
            raise ValueError(f"no saved level {level} (have {len(self._levels)})")
        mark = self._levels[level]
        trail = self._trail
        dom = self.dom
        while len(trail) > mark:
            var, old = trail.pop()
            dom[var] = old
        del self._levels[level:]
        self._clear_queue()

    @property
    def level(self) -> int:
        return len(self._levels)

    # modification

    def set_domain(self, var: int, mask: int) -> bool:
        old = self.dom[var]
        if mask == old:
            return True
        self._trail.append((var, old))
        self.dom[var] = mask
        if not mask:
            return False
        running = self._running
        for p in self.watchers[var]:
            pid = id(p)
            if pid in self._queued or (p is running and p.idempotent):
                continue
            self._queued.add(pid)
            self._queues[p.priority].append(p)
        return True

    def restrict(self, var: int, mask: int) -> bool:
        return self.set_domain(var, self.dom[var] & mask)

    def assign(self, var: int, value: int) -> bool:
        if value < 0 or not self.dom[var] >> value & 1:
            return False
        return self.set_domain(var, 1 << value)

    def remove(self, var: int, value: int) -> bool:
        if value < 0 or not self.dom[var] >> value & 1:
            return True
        return self.set_domain(var, self.dom[var] & ~(1 << value))

    # propagation

    def schedule(self, constraints: Iterable[Propagator]) -> None:
        for p in constraints:
            if id(p) not in self._queued:
                self._queued.add(id(p))
                self._queues[p.priority].append(p)

    def _clear_queue(self) -> None:
        self._queues[0].clear()
        self._queues[1].clear()
        self._queued.clear()

    def propagate(self, changed_vars: Iterable[int] | None = ()) -> bool:
        """Run propagators to a fixpoint. Returns False on a domain wipeout.

        Propagators already scheduled by domain changes always run; those
        watching ``changed_vars`` are added, and ``None`` schedules all.
        """
        if changed_vars is None:
            self.schedule(self.constraints)
        else:
            for v in changed_vars:
                self.schedule(self.watchers[v])
        if 0 in self.dom:
            self._clear_queue()
            return False
        cheap, costly = self._queues
        queued = self._queued
        try:
            while cheap or costly:
                p = cheap.popleft() if cheap else costly.popleft()
                queued.discard(id(p))
                self._running = p
                if not p.propagate(self):
                    self._clear_queue()
                    return False
        finally:
            self._running = None
        return True

    def __repr__(self) -> str:
        doms = ", ".join(f"{self.names[i]}={values_of(m)}" for i, m in enumerate(self.dom))
        return f"Problem({doms})"


def propagate_fixpoint(problem: Problem, changed_vars: Iterable[int] | None = None) -> bool:
    return problem.propagate(changed_vars)
