from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from matcocycle.cocycle import CocycleSpec
from matcocycle.errors import BudgetExceeded, InvariantViolation, NotPrimitiveError
from matcocycle.pressure import (bounded_distortion_constant, det_direction_log_partition,
                                 det_direction_pressure, estimate_pressure, partition_function)
from matcocycle.symbolic import SubshiftSpec
from matcocycle.tables import build_table, tree_logsumexp


def brute_log_partition(c, q, n):
    """Sum over all admissible words of the cylinder maximum of psi^q, by direct products."""
    total = []
    for I in itertools.product(range(c.k), repeat=n):
        if not c.sft.is_admissible(I):
            continue
        best = -math.inf
        for left, right in c.extensions(I):
            M = c.product_along(left + I + right)
            s = np.linalg.svd(M, compute_uv=False)
            best = max(best, float(np.dot(q, np.log(s))))
        total.append(best)
    m = max(total)
    return m + math.log(sum(math.exp(v - m) for v in total))


def commuting_oracle(n):
    return math.log(sum(math.comb(n, j) * 2 ** max(j, n - j) for j in range(n + 1)))


def test_zero_q_counts(typical_pair):
    for n in (1, 4, 7):
        assert partition_function(typical_pair, [0.0, 0.0], n) == pytest.approx(n * math.log(2), abs=1e-15)


def test_scalar_partition(scalar23):
    for n in range(1, 11):
        assert partition_function(scalar23, [1.0], n) / n == pytest.approx(math.log(5), abs=1e-13)


def test_commuting_example(commuting_pair):
    assert partition_function(commuting_pair, [1.0, 0.0], 1) == pytest.approx(math.log(4))
    values = []
    for n in range(1, 17):
        v = partition_function(commuting_pair, [1.0, 0.0], n)
        assert v == pytest.approx(commuting_oracle(n), abs=1e-11)
        values.append(v / n)
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_against_brute_force_with_windows():
    rng = np.random.default_rng(7)
    g = SubshiftSpec.golden_mean()
    gens = {u: rng.normal(size=(2, 2)) + 2 * np.eye(2) for u in [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 0, 1)]}
    for offset in (0, -1, -2):
        c = CocycleSpec(g, gens, offset=offset)
        for q in ([1.0, 0.0], [0.7, -0.4], [-1.0, 2.0]):
            for n in (1, 3, 6):
                assert partition_function(c, q, n) == pytest.approx(brute_log_partition(c, np.array(q), n), abs=1e-10)


def test_thread_count_invariance(typical_pair):
    a = build_table(typical_pair, 12, threads=1).log_partition([1.3, -0.2])
    b = build_table(typical_pair, 12, threads=2).log_partition([1.3, -0.2])
    assert a == b


def test_pairwise_sum_matches_logsumexp():
    rng = np.random.default_rng(0)
    v = rng.normal(size=1001) * 30
    m = v.max()
    assert tree_logsumexp(v) == pytest.approx(m + math.log(np.exp(v - m).sum()), rel=1e-14)
    assert tree_logsumexp(np.array([])) == -math.inf


def test_estimate_anchors(typical_pair):
    est = estimate_pressure(CocycleSpec(SubshiftSpec.full(3), {(a,): np.eye(2) * (a + 1) for a in range(3)}),
                            [0.0, 0.0], 6)
    assert all(v == math.log(3) for _, v in est.values)
    assert est.point_estimate == math.log(3)
    golden = CocycleSpec(SubshiftSpec.golden_mean(), {(0,): [[2.0]], (1,): [[3.0]]})
    est = estimate_pressure(golden, [0.0], 20)
    assert est.point_estimate == pytest.approx(math.log((1 + math.sqrt(5)) / 2), abs=1e-12)
    assert est.ratio_estimate == pytest.approx(math.log((1 + math.sqrt(5)) / 2), abs=1e-6)
    assert est.monotone_decreasing


def test_det_direction(typical_pair):
    for s in (0.5, 1.0, -0.7):
        q = [s / 2, s / 2]
        for n in (1, 5, 9):
            assert det_direction_log_partition(typical_pair, s, n) == pytest.approx(
                partition_function(typical_pair, q, n), abs=1e-9)
    g = CocycleSpec(SubshiftSpec.golden_mean(), {(0,): np.diag([2.0, 3.0]), (1,): [[1.0, 2.0], [0.0, 1.0]]})
    # transfer matrix D Q with D = diag(|det A_a|^{s/d})
    D = np.diag([6.0 ** 0.5, 1.0])
    rho = max(abs(np.linalg.eigvals(D @ np.array([[1.0, 1.0], [1.0, 0.0]]))))
    assert det_direction_pressure(g, 1.0) == pytest.approx(math.log(rho), abs=1e-12)
    est = estimate_pressure(g, [0.5, 0.5], 12)
    assert est.exact == pytest.approx(math.log(rho), abs=1e-12)


def test_superadditive_bracket(scalar23):
    est = estimate_pressure(scalar23, [1.0], 8, qm_constant_log=0.0, gap_k=0)
    assert est.superadditive_lower == pytest.approx(math.log(5))
    with pytest.raises(InvariantViolation):
        estimate_pressure(scalar23, [1.0], 8, qm_constant_log=5.0, gap_k=1)


def test_errors(scalar23):
    with pytest.raises(BudgetExceeded):
        partition_function(scalar23, [1.0], 12, budget=1000)
    periodic = CocycleSpec(SubshiftSpec([[0, 1], [1, 0]]), {(0,): [[2.0]], (1,): [[3.0]]})
    with pytest.raises(NotPrimitiveError):
        partition_function(periodic, [1.0], 3)
    with pytest.raises(ValueError):
        partition_function(scalar23, [1.0, 2.0], 3)


def test_bounded_distortion(typical_pair):
    assert bounded_distortion_constant(typical_pair, 1, 5).constant == 1.0
    ident = CocycleSpec(SubshiftSpec.full(2), {(a, b): np.eye(2) for a in (0, 1) for b in (0, 1)})
    assert bounded_distortion_constant(ident, 1, 5).constant == 1.0
    rng = np.random.default_rng(1)
    c = CocycleSpec(SubshiftSpec.full(2), {(a, b): np.eye(2) + rng.uniform(-0.2, 0.2, (2, 2))
                                           for a in (0, 1) for b in (0, 1)})
    rep = bounded_distortion_constant(c, 1, 10)
    assert all(b >= a for a, b in zip(rep.per_n, rep.per_n[1:]))
    assert 1 < rep.constant < 10
    # plateau: the last increments are small
    assert rep.per_n[-1] / rep.per_n[-3] < 1.05


q_vectors = st.lists(st.floats(-3, 3), min_size=2, max_size=2).map(np.array)


@given(q_vectors, q_vectors)
def test_midpoint_convexity(q1, q2):
    c = CocycleSpec(SubshiftSpec.full(2), {(0,): np.diag([2.0, 0.5]), (1,): np.array([[2.0, 1.0], [1.0, 1.0]])})
    T = build_table(c, 8)
    mid = T.log_partition((q1 + q2) / 2)
    assert mid <= (T.log_partition(q1) + T.log_partition(q2)) / 2 + 1e-9
