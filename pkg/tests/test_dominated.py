from __future__ import annotations

import math

import numpy as np
import pytest

from matcocycle.cocycle import CocycleSpec
from matcocycle.dominated import (DEFAULT_K0, InducedCocycle, build_induced, entropy_exponent_transfer,
                                  find_loop_for_word, induced_pressure, pressure_comparison)
from matcocycle.errors import InadmissibleWord, InvariantViolation
from matcocycle.measures import MarkovMeasure
from matcocycle.pressure import estimate_pressure
from matcocycle.structure import check_domination
from matcocycle.symbolic import HomoclinicPointSym, PeriodicPointSym, SubshiftSpec


def test_diagonal_system_needs_no_connectors(dominated_pair):
    p = PeriodicPointSym((0,))
    ic = build_induced(dominated_pair, p, None, 4)
    assert ic.size == 16
    assert all(L.m1 == 0 and L.m2 == 0 for L in ic.letters)
    assert np.array_equal(ic.lengths, np.full(16, 4))
    assert ic.verify_cones() > 0


def test_diagonal_comparison_is_exact(dominated_pair):
    p = PeriodicPointSym((0,))
    for q in ([1.0, 0.0], [0.5, 0.5], [0.0, 0.0]):
        rows = pressure_comparison(dominated_pair, p, None, q, [2, 4])
        for row in rows:
            assert row.max_connector == 0
            assert row.difference <= 1e-12


def test_typical_letters(typical_pair, typical_points):
    p, z = typical_points
    ic = build_induced(typical_pair, p, z, 6)
    assert ic.size == 64
    assert max(max(L.m1, L.m2) for L in ic.letters) <= DEFAULT_K0
    for L in ic.letters:
        assert L.word[len(L.prefix):len(L.prefix) + 6] == L.core
        assert L.prefix == () or L.prefix[0] == 0
        assert np.allclose(L.matrix, typical_pair.product_along(L.word))
    assert ic.verify_cones() > 0
    assert check_domination(ic.spec, 1, 2).passed


def test_loop_for_word_inadmissible():
    sft = SubshiftSpec([[1, 1], [1, 0]])
    c = CocycleSpec(sft, {(0,): np.diag([2.0, 0.5]), (1,): np.array([[2.0, 1.0], [1.0, 1.0]])})
    p = PeriodicPointSym((0,))
    z = HomoclinicPointSym(p, (1,), 2)
    with pytest.raises(InadmissibleWord):
        find_loop_for_word(c, p, z, (1, 1))
    L = find_loop_for_word(c, p, z, (1, 0, 1))
    assert L.word[0] == 0 and sft.is_admissible(L.word + (0,))


def test_zero_q_counts_letters(typical_pair, typical_points):
    p, z = typical_points
    ic = build_induced(typical_pair, p, z, 4)
    est = induced_pressure(ic, [0.0, 0.0])
    assert est.values[-1][1] == pytest.approx(math.log(ic.size), abs=1e-12)


def test_single_letter_alphabet():
    c = CocycleSpec(SubshiftSpec.full(1), {(0,): np.diag([3.0, 1.0])})
    p = PeriodicPointSym((0,))
    ic = build_induced(c, p, None, 3)
    assert ic.size == 1
    est = induced_pressure(ic, [1.0, 0.0])
    assert est.values[-1][1] / 3 == pytest.approx(math.log(3.0))


def test_scalar_comparison(scalar23):
    p = PeriodicPointSym((0,))
    rows = pressure_comparison(scalar23, p, None, [1.0], [2, 3])
    for row in rows:
        assert row.difference <= 1e-12
        assert row.direct == pytest.approx(math.log(5.0))


def test_json_roundtrip_reverifies(typical_pair, typical_points):
    p, z = typical_points
    ic = build_induced(typical_pair, p, z, 3)
    data = ic.to_json()
    again = InducedCocycle.from_json(data, ic.spec)
    assert again.size == ic.size
    assert [L.word for L in again.letters] == [L.word for L in ic.letters]
    bad = CocycleSpec(ic.spec.sft, {(a,): np.eye(2) for a in range(ic.size)})
    with pytest.raises(InvariantViolation):
        InducedCocycle.from_json(data, bad)


def test_rejects_non_typical_point(commuting_pair):
    p = PeriodicPointSym((0,))
    z = HomoclinicPointSym(p, (1,), 2)
    with pytest.raises(InvariantViolation):
        build_induced(commuting_pair, p, z, 3)


def test_transfer_dirac(typical_pair, typical_points):
    p, z = typical_points
    n = 4
    ic = build_induced(typical_pair, p, z, n)
    mu = MarkovMeasure.dirac_fixed_point(ic.size, 0)
    rep = entropy_exponent_transfer(ic, mu, n)
    assert rep.h_mu == 0.0 and rep.h_nu_abramov == 0.0
    L0 = ic.letters[0]
    assert rep.mean_length == len(L0.word)
    sv = np.linalg.svd(np.linalg.matrix_power(L0.matrix, 40), compute_uv=False)
    assert rep.chi_mu == pytest.approx(math.log(sv[0]) / 40, abs=1e-3)
    assert all(v in (True, None) for v in rep.checks.values())


def test_transfer_uniform(dominated_pair):
    p = PeriodicPointSym((0,))
    n = 3
    ic = build_induced(dominated_pair, p, None, n)
    mu = MarkovMeasure.bernoulli(np.full(ic.size, 1 / ic.size))
    rep = entropy_exponent_transfer(ic, mu, n, depth=3)
    assert rep.prefix_free
    assert rep.h_mu == pytest.approx(n * math.log(2))
    assert n * rep.h_nu_abramov <= math.log(ic.size) + 1e-12
    assert rep.h_nu_block == pytest.approx(math.log(2), abs=1e-9)
    base = estimate_pressure(dominated_pair, [1.0, 0.0], 12).point_estimate
    assert rep.chi_nu_abramov <= base
    assert all(v in (True, None) for v in rep.checks.values())
