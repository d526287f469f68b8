"""Exact-inference layer: partition, conditionals, pseudolikelihood.

The reference point throughout is plain-Python enumeration from
``oracles`` — an implementation with no shared code paths.
"""

import math

import numpy as np
import pytest

import oracles
from proofqa.errors import DimensionMismatch, TooLarge
from proofqa.pgm import (Assignment, LogPotentials, conditional_answer,
                         conditional_edge, conditional_node, exact_conditional,
                         exact_log_partition, joint_log_score, num_pairs,
                         pair_index, pair_table, pseudolikelihood_log)

# Frozen expected values, written down before running anything:
FIVE_LN2 = 5 * math.log(2)            # 3.4657359027997265
QUARTER_SPLIT = (0.25, 0.75)          # softmax of (0, ln 3)
NINE_SPLIT = (0.1, 0.9)               # softmax of (0, ln 9)
FOUR_SPLIT = (0.2, 0.8)               # softmax of (0, ln 4)


def test_pair_layout_is_row_major():
    src, dst = pair_table(3)
    expected = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]
    assert list(zip(src.tolist(), dst.tolist())) == expected
    for pos, (i, j) in enumerate(expected):
        assert pair_index(i, j, 3) == pos
    assert num_pairs(3) == 6
    assert num_pairs(2) == 2


def test_pair_index_is_a_bijection():
    m = 5
    seen = {pair_index(i, j, m) for i in range(m) for j in range(m) if i != j}
    assert seen == set(range(num_pairs(m)))


def test_zero_potentials_partition_m2():
    lp = LogPotentials.zeros(2)
    assert exact_log_partition(lp) == pytest.approx(FIVE_LN2, abs=1e-15)


def test_zero_potentials_partition_counts_bits():
    for m in (2, 3, 4):
        bits = 1 + m + m * (m - 1)
        lp = LogPotentials.zeros(m)
        assert exact_log_partition(lp) == pytest.approx(bits * math.log(2), abs=1e-12)


def test_partition_matches_enumeration_oracle():
    rng = np.random.default_rng(11)
    for _ in range(10):
        lp = LogPotentials.random(rng, 2)
        assert exact_log_partition(lp) == pytest.approx(
            oracles.brute_log_partition(lp), abs=1e-10)


def test_partition_rejects_oversized_models():
    with pytest.raises(TooLarge):
        exact_log_partition(LogPotentials.zeros(5))


def test_joint_scores_match_oracle():
    rng = np.random.default_rng(3)
    lp = LogPotentials.random(rng, 3)
    for _ in range(20):
        y = Assignment.random(rng, 3)
        assert joint_log_score(lp, y) == pytest.approx(
            oracles.brute_score(lp, y.a, y.v, y.e), abs=1e-12)


def test_distribution_normalizes():
    rng = np.random.default_rng(5)
    lp = LogPotentials.random(rng, 2)
    log_z = exact_log_partition(lp)
    total = sum(math.exp(oracles.brute_score(lp, a, v, e) - log_z)
                for a, v, e in oracles._all_assignments(2))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_answer_conditional_frozen_value():
    lp = LogPotentials.zeros(2)
    lp.phi_a = np.array([0.0, math.log(3)])
    dist = conditional_answer(lp, np.zeros(2, dtype=int), np.zeros(2, dtype=int))
    assert dist == pytest.approx(QUARTER_SPLIT, abs=1e-12)


def test_node_conditional_frozen_value():
    # column layout per node is 2*v + a, so with a=0 the (v=1) cell of
    # node 0 sits at column 2; ln 9 there against zeros gives (0.1, 0.9).
    lp = LogPotentials.zeros(2)
    lp.phi_v[0] = np.array([0.0, 0.0, math.log(9), 0.0])
    y = Assignment(a=0, v=np.zeros(2, dtype=int), e=np.zeros(2, dtype=int))
    assert conditional_node(lp, y, 0) == pytest.approx(NINE_SPLIT, abs=1e-12)


def test_edge_conditional_frozen_value():
    # with v_i = v_j = 0, a = 0 the (e=1) cell sits at column 2.
    lp = LogPotentials.zeros(2)
    lp.phi_e[pair_index(0, 1, 2)][2] = math.log(4)
    y = Assignment(a=0, v=np.zeros(2, dtype=int), e=np.zeros(2, dtype=int))
    assert conditional_edge(lp, y, 0, 1) == pytest.approx(FOUR_SPLIT, abs=1e-12)


@pytest.mark.parametrize("m", [2, 3])
def test_conditionals_match_enumeration_oracle(m):
    rng = np.random.default_rng(17)
    for _ in range(8):
        lp = LogPotentials.random(rng, m)
        y = Assignment.random(rng, m)
        for var in [("a",)] + [("v", i) for i in range(m)] + \
                [("e", i, j) for i in range(m) for j in range(m) if i != j]:
            want = oracles.brute_conditional(lp, y, var)
            assert exact_conditional(lp, y, var) == pytest.approx(want, abs=1e-10)
            if var[0] == "a":
                fast = conditional_answer(lp, y.v, y.e)
            elif var[0] == "v":
                fast = conditional_node(lp, y, var[1])
            else:
                fast = conditional_edge(lp, y, var[1], var[2])
            assert fast == pytest.approx(want, abs=1e-10)


def test_pseudolikelihood_sums_log_conditionals():
    rng = np.random.default_rng(23)
    for m in (2, 3):
        lp = LogPotentials.random(rng, m)
        y = Assignment.random(rng, m)
        want = 0.0
        for var in [("a",)] + [("v", i) for i in range(m)] + \
                [("e", i, j) for i in range(m) for j in range(m) if i != j]:
            dist = oracles.brute_conditional(lp, y, var)
            if var[0] == "a":
                want += math.log(dist[y.a])
            elif var[0] == "v":
                want += math.log(dist[y.v[var[1]]])
            else:
                want += math.log(dist[y.e[pair_index(var[1], var[2], m)]])
        assert pseudolikelihood_log(lp, y) == pytest.approx(want, abs=1e-10)


def test_conditionals_are_shift_invariant():
    """Adding a constant to a whole factor table moves log Z, not conditionals."""
    rng = np.random.default_rng(29)
    lp = LogPotentials.random(rng, 2)
    y = Assignment.random(rng, 2)
    base_z = exact_log_partition(lp)
    base_answer = conditional_answer(lp, y.v, y.e)
    base_node = conditional_node(lp, y, 1)

    shifted = LogPotentials(lp.phi_a + 0.7, lp.phi_v.copy(), lp.phi_e.copy())
    assert exact_log_partition(shifted) == pytest.approx(base_z + 0.7, abs=1e-10)
    assert conditional_answer(shifted, y.v, y.e) == pytest.approx(base_answer, abs=1e-12)

    shifted = LogPotentials(lp.phi_a.copy(), lp.phi_v + 1.3, lp.phi_e.copy())
    assert conditional_node(shifted, y, 1) == pytest.approx(base_node, abs=1e-12)


def test_conditional_rows_sum_to_one():
    rng = np.random.default_rng(31)
    lp = LogPotentials.random(rng, 3)
    y = Assignment.random(rng, 3)
    assert conditional_answer(lp, y.v, y.e).sum() == pytest.approx(1.0, abs=1e-12)
    for i in range(3):
        assert conditional_node(lp, y, i).sum() == pytest.approx(1.0, abs=1e-12)
    assert conditional_edge(lp, y, 2, 1).sum() == pytest.approx(1.0, abs=1e-12)


def test_potential_shape_validation():
    with pytest.raises(DimensionMismatch):
        LogPotentials(np.zeros(3), np.zeros((2, 4)), np.zeros((2, 16)))
    with pytest.raises(DimensionMismatch):
        LogPotentials(np.zeros(2), np.zeros((2, 3)), np.zeros((2, 16)))
    with pytest.raises(DimensionMismatch):
        LogPotentials(np.zeros(2), np.zeros((2, 4)), np.zeros((1, 16)))
