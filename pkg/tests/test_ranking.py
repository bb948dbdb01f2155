import pytest
from hypothesis import given, settings, strategies as st

from dbsearch.csp import Problem
from dbsearch.ranking import (check_partition, first_fail, input_order, most_constrained,
                              partition_best_plateau, partition_percentile, partition_plateau,
                              partition_singletons, partition_star, rank_occurrence,
                              rank_reduced_cost, rank_sorted)
from dbsearch.propagators import NotEqual


def test_reduced_cost_plateau_first():
    ranked = rank_reduced_cost(0, {1: 0, 2: 0, 3: 5})
    assert partition_plateau(ranked) == [[1, 2], [3]]


def test_equal_reduced_costs_single_cell():
    ranked = rank_reduced_cost(0, [4, 4, 4])
    assert partition_plateau(ranked) == [[0, 1, 2]]


def test_reduced_cost_row_restricted_to_values():
    assert [v for v, _ in rank_reduced_cost(0, [9, 0, 3, 1], values=[0, 2, 3])] == [3, 2, 0]


def test_occurrence_ranking():
    ranked = rank_occurrence({1: 3, 2: 5, 3: 3}, [1, 2, 3, 4])
    assert [v for v, _ in ranked] == [2, 1, 3, 4]
    assert partition_plateau(ranked) == [[2], [1, 3], [4]]


def test_empty_grid_one_plateau():
    ranked = rank_occurrence({}, [1, 2, 3])
    assert partition_plateau(ranked) == [[1, 2, 3]]


def test_distinct_ranks_give_singletons():
    ranked = rank_sorted([(0, 3), (1, 2), (2, 1)])
    assert partition_plateau(ranked) == partition_singletons(ranked) == [[0], [1], [2]]


def test_plateau_epsilon_absolute_and_relative():
    ranked = [(0, 10.0), (1, 9.95), (2, 9.0)]
    assert partition_plateau(ranked, 0.1) == [[0, 1], [2]]
    assert partition_plateau(ranked, 0.01, relative=True) == [[0, 1], [2]]
    with pytest.raises(ValueError):
        partition_plateau([])


def test_best_plateau_two_cells():
    ranked = rank_reduced_cost(0, [0, 0, 4, 7, 9])
    assert partition_best_plateau(ranked) == [[0, 1], [2, 3, 4]]
    assert partition_best_plateau(rank_reduced_cost(0, [1, 1])) == [[0, 1]]


def test_star_cutoffs():
    ranked = [(v, -v) for v in range(6)]
    assert partition_star(ranked, (1, 2, 4)) == [[0], [1], [2, 3], [4, 5]][:3]
    assert partition_star(ranked, (2, 6)) == [[0, 1], [2, 3, 4, 5]]
    assert partition_star(ranked[:3], (1, 2, 4)) == [[0], [1], [2]]
    with pytest.raises(ValueError):
        partition_star(ranked, (2, 2))


def test_percentile_rounding():
    ranked = [(v, -v) for v in range(10)]
    cells = partition_percentile(ranked, (0.25, 0.75))
    assert [len(c) for c in cells] == [3, 7]
    with pytest.raises(ValueError):
        partition_percentile(ranked, (0.5, 0.4))


ranks = st.lists(st.tuples(st.integers(0, 30), st.integers(-5, 5)), min_size=1, max_size=12,
                 unique_by=lambda t: t[0])


@given(ranks, st.floats(0, 3))
@settings(max_examples=200, deadline=None)
def test_plateau_partition_is_ordered_cover(pairs, eps):
    ranked = rank_sorted(pairs)
    check_partition(partition_plateau(ranked, eps), ranked)
    check_partition(partition_best_plateau(ranked, eps), ranked)
    check_partition(partition_singletons(ranked), ranked)


@given(ranks, st.lists(st.integers(1, 12), min_size=1, max_size=4, unique=True))
@settings(max_examples=200, deadline=None)
def test_star_partition_is_ordered_cover(pairs, cuts):
    ranked = rank_sorted(pairs)
    cutoffs = sorted(cuts)
    if cutoffs[-1] < len(ranked):
        cutoffs.append(len(ranked))
    check_partition(partition_star(ranked, cutoffs), ranked)


def test_variable_orders():
    p = Problem([[0, 1, 2], [0], [0, 1], [0, 1]], [NotEqual(2, 3), NotEqual(3, 1)])
    assert first_fail(p, range(4)) == 2
    assert input_order(p, range(4)) == 0
    assert most_constrained(p, range(4)) == 3
    assert first_fail(p, [1]) is None


def test_plateau_groups_equal_runs():
    ranked = list(zip("abcdef", (5, 5, 3, 3, 3, 1)))
    assert partition_plateau(ranked) == [["a", "b"], ["c", "d", "e"], ["f"]]


def test_percentile_documented_sizes():
    ten = [(v, -v) for v in range(10)]
    assert [len(c) for c in partition_percentile(ten, (0.1, 0.9))] == [1, 9]
    assert partition_percentile(ten, (1.0,)) == [list(range(10))]
    seven = [(v, -v) for v in range(7)]
    assert [len(c) for c in partition_percentile(seven, (0.5, 0.5))] == [4, 3]
    six = [(v, -v) for v in range(6)]
    assert [len(c) for c in partition_star(six, (2, 4, 6))] == [2, 2, 2]
    assert partition_star(six, (1,)) == [[0]]


def test_reduced_cost_row_of_solved_assignment_has_zero():
    from dbsearch.assignment import solve_assignment
    cost = [[7, 3, 9, 4], [2, 8, 6, 5], [4, 4, 1, 9], [6, 2, 3, 8]]
    rc = solve_assignment(cost).reduced_costs
    for i in range(4):
        ranked = rank_reduced_cost(i, rc[i])
        assert ranked[0][1] == 0
        zeros = {j for j in range(4) if rc[i][j] == 0}
        assert set(partition_plateau(ranked)[0]) == zeros
