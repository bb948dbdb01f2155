import random

import pytest
from hypothesis import given, settings, strategies as st

from dbsearch.csp import Domain, Problem, Propagator, mask_of, min_value, values_of
from dbsearch.propagators import AllDifferent, NotEqual


def test_bitset_helpers():
    m = mask_of([0, 3, 5])
    assert values_of(m) == [0, 3, 5]
    assert min_value(m) == 0
    assert values_of(0) == []
    with pytest.raises(ValueError):
        mask_of([-1])


def test_domain_view():
    p = Problem([[1, 2, 4]])
    d = p.domain(0)
    assert isinstance(d, Domain)
    assert d.values == [1, 2, 4] and len(d) == 3 and 2 in d and 3 not in d and -1 not in d
    assert d.initial_size == 3


def test_save_remove_restore_round_trip():
    p = Problem([range(6), range(6)])
    before = p.snapshot()
    lvl = p.save()
    for v in (1, 3, 5):
        assert p.remove(0, v)
    assert p.values(0) == [0, 2, 4]
    p.restore(lvl)
    assert p.snapshot() == before


def test_nested_levels_keep_outer_changes():
    p = Problem([range(5)])
    outer = p.save()
    p.remove(0, 4)
    inner = p.save()
    p.remove(0, 0)
    p.restore(inner)
    assert p.values(0) == [0, 1, 2, 3]
    p.restore(outer)
    assert p.values(0) == [0, 1, 2, 3, 4]


def test_restore_without_changes_is_noop():
    p = Problem([range(3)])
    lvl = p.save()
    p.restore(lvl)
    assert p.values(0) == [0, 1, 2]
    assert p.level == 0


def test_restore_unknown_level_raises():
    p = Problem([range(3)])
    with pytest.raises(ValueError):
        p.restore(0)
    p.save()
    with pytest.raises(ValueError):
        p.restore(3)


def test_assign_and_remove_semantics():
    p = Problem([[1, 2, 3]])
    assert not p.assign(0, 7)
    assert p.remove(0, 7)  # absent value: nothing to do
    assert p.assign(0, 2)
    assert p.is_fixed(0) and p.value(0) == 2
    assert not p.remove(0, 2)  # wipe-out


def test_propagate_detects_failure_and_reaches_fixpoint():
    # x0 != x1, x1 != x2, x0 = 1 forces x1 = 2, then x2 = 1
    p = Problem([[1], [1, 2], [1, 2]], [NotEqual(0, 1), NotEqual(1, 2)])
    assert p.propagate(None)
    assert p.assignment() == [1, 2, 1]
    q = Problem([[1], [1], [1, 2]], [NotEqual(0, 1)])
    assert not q.propagate(None)


def test_unknown_variable_in_scope_rejected():
    with pytest.raises(ValueError):
        Problem([[0, 1]], [NotEqual(0, 3)])


class _Counter(Propagator):
    def __init__(self, scope):
        self.scope = tuple(scope)
        self.calls = 0

    def propagate(self, problem):
        self.calls += 1
        return True


def test_scheduling_only_watchers():
    a, b = _Counter([0]), _Counter([1])
    p = Problem([range(3), range(3)], [a, b])
    p.propagate(None)
    assert (a.calls, b.calls) == (1, 1)
    p.remove(1, 0)
    p.propagate()
    assert (a.calls, b.calls) == (1, 2)


ops = st.lists(st.tuples(st.sampled_from(["save", "remove", "restore"]),
                         st.integers(0, 3), st.integers(0, 5)), max_size=40)


@given(ops)
@settings(max_examples=200, deadline=None)
def test_trail_reproduces_every_saved_state(seq):
    p = Problem([range(6)] * 4)
    states = []
    for op, var, val in seq:
        if op == "save":
            states.append((p.save(), p.snapshot()))
        elif op == "remove":
            if p.size(var) > 1:
                p.remove(var, val)
        elif states:
            # jump back to any saved level; later levels are discarded
            i = var % len(states)
            lvl, snap = states[i]
            del states[i:]
            p.restore(lvl)
            assert p.snapshot() == snap
    while states:
        lvl, snap = states.pop()
        p.restore(lvl)
        assert p.snapshot() == snap


@given(st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_fixpoint_independent_of_constraint_order(seed):
    rng = random.Random(seed)
    n = rng.randint(3, 6)
    doms = [rng.sample(range(6), rng.randint(1, 5)) for _ in range(n)]
    cons = []
    for _ in range(rng.randint(1, 5)):
        xs = rng.sample(range(n), rng.randint(2, n))
        cons.append(("ad", tuple(xs)))
    for _ in range(rng.randint(0, 4)):
        x, y = rng.sample(range(n), 2)
        cons.append(("ne", (x, y)))

    def build(order):
        cs = [AllDifferent(s) if k == "ad" else NotEqual(*s) for k, s in order]
        p = Problem(doms, cs)
        ok = p.propagate(None)
        return ok, p.snapshot() if ok else None

    first = build(cons)
    shuffled = cons[:]
    rng.shuffle(shuffled)
    assert build(shuffled) == first
