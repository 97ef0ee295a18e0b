from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from matcocycle.cocycle import CocycleSpec
from matcocycle.errors import CombinatorialBudget
from matcocycle.multilinear import exterior_power
from matcocycle.structure import (check_domination, check_pinching, check_twisting, check_typical,
                                  exterior_cocycle, homoclinic_loop_matrix, periodic_matrix,
                                  probe_quasi_multiplicativity, twisting_from_matrices)
from matcocycle.symbolic import HomoclinicPointSym, PeriodicPointSym, SubshiftSpec

from conftest import rotation

LOOP_ORACLE = np.array([[1.0, 0.125], [8.0, 2.0]])


def one_generator(A):
    return CocycleSpec(SubshiftSpec.full(2), {(0,): np.asarray(A, dtype=float), (1,): np.eye(len(A))})


def test_pinching_examples():
    p = PeriodicPointSym((0,))
    v = check_pinching(one_generator(np.diag([2.0, 0.5])), p)
    assert v.passed and v.margin == pytest.approx(0.75)
    assert check_pinching(one_generator(rotation(0.9)), p).failed
    assert check_pinching(one_generator(np.diag([4.0, 2.0, 1.0])), p).passed
    assert check_pinching(one_generator(np.diag([4.0, 2.0, -2.0])), p).failed


def test_loop_matrix_hand_oracle(typical_pair, typical_points):
    p, z = typical_points
    # A_0^{-2} A_1 A_0 for the excursion through symbol 1 at coordinate 1
    H = homoclinic_loop_matrix(typical_pair, p, z)
    assert np.allclose(H, LOOP_ORACLE, atol=1e-12)
    A0, A1 = np.diag([2.0, 0.5]), np.array([[2.0, 1.0], [1.0, 1.0]])
    assert np.allclose(H, np.linalg.matrix_power(np.linalg.inv(A0), 2) @ A1 @ A0, atol=1e-12)
    Hd = homoclinic_loop_matrix(typical_pair, p, z, 2)
    assert Hd[0, 0] == pytest.approx(np.linalg.det(H))


@given(st.integers(1, 3), st.lists(st.integers(0, 1), min_size=1, max_size=3))
def test_loop_matrix_exterior_relation(t, exc):
    rng = np.random.default_rng(len(exc) * 7 + t)
    c = CocycleSpec(SubshiftSpec.full(2), {(a,): rng.normal(size=(3, 3)) + 3 * np.eye(3) for a in (0, 1)})
    p = PeriodicPointSym((0,))
    exc = tuple(exc)
    if all(s == 0 for s in exc):
        exc = exc[:-1] + (1,)
    z = HomoclinicPointSym(p, exc, len(exc) + 1)
    H = homoclinic_loop_matrix(c, p, z)
    Ht = homoclinic_loop_matrix(c, p, z, t)
    assert np.allclose(Ht, exterior_power(H, t), rtol=1e-9, atol=1e-9 * np.abs(Ht).max())


def test_degenerate_homoclinic_rejected():
    p = PeriodicPointSym((0,))
    with pytest.raises(ValueError):
        HomoclinicPointSym(p, (0,), 2).validate(SubshiftSpec.full(2))


def test_twisting_examples(typical_pair, typical_points):
    p, z = typical_points
    v = check_twisting(typical_pair, p, z)
    assert v.passed
    P = np.diag([2.0, 0.5])
    assert twisting_from_matrices(P, np.eye(2)).failed
    assert twisting_from_matrices(P, np.array([[0.0, 1.0], [1.0, 0.0]])).failed
    assert twisting_from_matrices(P, LOOP_ORACLE).passed


@given(st.floats(0.1, 10), st.floats(0.1, 10))
def test_twisting_scale_invariance(a, b):
    P = np.diag([3.0, 1.5, 0.5])
    H = np.array([[1.0, 0.4, 0.3], [0.2, 1.0, 0.5], [0.7, 0.1, 1.0]])
    v1 = twisting_from_matrices(P, H)
    v2 = twisting_from_matrices(a * P, b * H)
    assert v1.verdict == v2.verdict
    assert v1.margin == pytest.approx(v2.margin, rel=1e-9)


def test_twisting_cap():
    with pytest.raises(CombinatorialBudget):
        twisting_from_matrices(np.diag([4.0, 3.0, 2.0]), np.eye(3), cap=10)


def test_typical(typical_pair, typical_points):
    p, z = typical_points
    assert check_typical(typical_pair, p, z).passed
    scalar = CocycleSpec(SubshiftSpec.full(2), {(0,): [[2.0]], (1,): [[3.0]]})
    assert check_typical(scalar, p, z).passed


def test_qm_examples(commuting_pair, typical_pair, positive_pair):
    v = probe_quasi_multiplicativity(commuting_pair, 8, 3)
    assert v.failed
    fit = v.witness["fits"][str(v.witness["k"])]
    assert fit["slope"] == pytest.approx(-math.log(2), abs=1e-9)
    pair = v.witness["witness_pair"]
    assert set(pair["I"]) != set(pair["J"])
    assert probe_quasi_multiplicativity(typical_pair, 6, 2).passed
    assert probe_quasi_multiplicativity(positive_pair, 6, 1).passed
    scalar = CocycleSpec(SubshiftSpec.full(2), {(0,): [[2.0]], (1,): [[3.0]]})
    v = probe_quasi_multiplicativity(scalar, 5, 1)
    assert v.passed and v.margin >= 1.0


def test_domination_examples(dominated_pair, rotations, commuting_pair):
    v = check_domination(dominated_pair, 1, 10)
    assert v.passed
    assert v.witness["tau"] <= 1 / 3 + 1e-3
    assert check_domination(rotations, 1, 10).failed
    assert check_domination(commuting_pair, 1, 16).failed
    with pytest.raises(ValueError):
        check_domination(dominated_pair, 2, 4)


def test_wedge_domination_equivalence():
    # index i of A is index 1 of the i-th exterior power
    c = CocycleSpec(SubshiftSpec.full(2), {(0,): np.diag([8.0, 2.0, 1.0]), (1,): np.diag([6.0, 2.0, 1.0])})
    for i in (1, 2):
        direct = check_domination(c, i, 6)
        wedge = check_domination(exterior_cocycle(c, i), 1, 6)
        assert direct.verdict == wedge.verdict
        assert direct.witness["log_g"] == pytest.approx(wedge.witness["log_g"], abs=1e-9)


def test_periodic_matrix(typical_pair):
    p = PeriodicPointSym((0, 1))
    assert np.allclose(periodic_matrix(typical_pair, p), np.array([[2.0, 1.0], [1.0, 1.0]]) @ np.diag([2.0, 0.5]))
