from __future__ import annotations

import math

import numpy as np
import pytest

from matcocycle.cocycle import CocycleSpec
from matcocycle.errors import EmptyLevelSet, TargetOutsideDomain
from matcocycle.spectrum import (auto_targets, estimate_spectrum_domain, legendre_entropy,
                                 level_set_entropy_oracle, spectrum_curve)
from matcocycle.symbolic import SubshiftSpec

L2, L3 = math.log(2), math.log(3)


def binary_entropy_at(alpha):
    """Closed-form entropy of the scalar {2, 3} system at exponent alpha."""
    p = (L3 - alpha) / (L3 - L2)
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


def test_scalar_hull(scalar23):
    for n in (1, 5, 12):
        dom = estimate_spectrum_domain(scalar23, n)
        assert sorted(dom.hull_vertices.ravel()) == pytest.approx([L2, L3])
        assert dom.affine_dim == 1


def test_single_generator_hull():
    A = np.array([[3.0, 1.0], [1.0, 1.0]])
    c = CocycleSpec(SubshiftSpec.full(1), {(0,): A})
    dom = estimate_spectrum_domain(c, 64)
    moduli = np.sort(np.log(np.abs(np.linalg.eigvals(A))))[::-1]
    assert dom.affine_dim == 0
    assert np.allclose(dom.hull_vertices[0], moduli, atol=0.02)


def test_commuting_hull_segment(commuting_pair):
    n = 12
    dom = estimate_spectrum_domain(commuting_pair, n)
    V = sorted(map(tuple, np.round(dom.hull_vertices, 12)))
    # extreme words: constant (n, 0) and balanced (n/2, n/2) letter counts
    assert V == sorted([(round(L2, 12), 0.0), (round(L2 / 2, 12), round(L2 / 2, 12))])
    assert dom.affine_dim == 1


def test_scalar_duality_values(scalar23):
    for t in (0.25, 0.5, 0.8):
        alpha = t * L2 + (1 - t) * L3
        pt = legendre_entropy(scalar23, [alpha], 16)
        assert pt.entropy == pytest.approx(binary_entropy_at(alpha), abs=1e-6)
        assert pt.q_star[0] == pytest.approx(math.log(t / (1 - t)) / (L2 - L3), abs=1e-4)


def test_boundary_and_outside(scalar23):
    pt = legendre_entropy(scalar23, [L3], 12)
    assert pt.entropy < 0.01
    assert "boundary_target" in pt.flags
    with pytest.raises(TargetOutsideDomain):
        legendre_entropy(scalar23, [1.2], 12)


def test_entropy_bounded_by_topological(typical_pair):
    dom = estimate_spectrum_domain(typical_pair, 10)
    for alpha in auto_targets(dom, 5):
        pt = legendre_entropy(typical_pair, alpha, 10)
        assert 0 <= pt.entropy <= L2 + 1e-12


def test_oracle_examples(scalar23):
    o = level_set_entropy_oracle(scalar23, [(L2 + L3) / 2], 16, eps=0.05)
    # words with j twos and 16 - j threes land within eps of the midpoint
    expected = sum(math.comb(16, j) for j in range(17)
                   if abs((j * L2 + (16 - j) * L3) / 16 - (L2 + L3) / 2) < 0.05)
    assert o.count == expected
    empty = level_set_entropy_oracle(scalar23, [2.0], 10, eps=0.05)
    assert empty.is_empty
    with pytest.raises(EmptyLevelSet):
        empty.value
    edge = level_set_entropy_oracle(scalar23, [L3], 16, eps=1e-6)
    assert edge.count == 1 and edge.value == 0


def test_curve_matches_closed_form_and_is_concave(scalar23):
    n = 16
    dom = estimate_spectrum_domain(scalar23, n)
    targets = auto_targets(dom, 9)
    pts = spectrum_curve(scalar23, targets, n, with_oracle=False)
    ent = np.array([p.entropy for p in pts])
    al = np.array([p.alpha[0] for p in pts])
    assert np.all(np.abs(ent - [binary_entropy_at(a) for a in al]) < 0.05)
    second = ent[:-2] - 2 * ent[1:-1] + ent[2:]
    assert np.all(second <= 1e-9)


def test_curve_outside_and_measure(scalar23):
    pts = spectrum_curve(scalar23, [[2.0], [(L2 + L3) / 2]], 10, with_oracle=True, with_measure=True, measure_n=6)
    assert pts[0].entropy is None and "outside" in pts[0].flags
    methods = [p.method for p in pts[1:]]
    assert methods == ["duality", "oracle", "measure-sup"]
    duality, measure = pts[1], pts[3]
    assert measure.entropy <= duality.entropy + 1e-9
    assert measure.entropy == pytest.approx(L2, abs=1e-3)


def test_special_linear_pair(typical_pair):
    # both generators have determinant one, so chi_1 + chi_2 = 0 and the hull is a segment
    n = 12
    dom = estimate_spectrum_domain(typical_pair, n)
    assert dom.affine_dim == 1
    assert np.allclose(dom.hull_vertices.sum(axis=1), 0, atol=1e-12)
    for alpha in auto_targets(dom, 3):
        assert 0 <= legendre_entropy(typical_pair, alpha, n).entropy <= L2


def test_two_dimensional_duality_against_oracle():
    c = CocycleSpec(SubshiftSpec.full(2), {(0,): np.diag([2.0, 1.0]), (1,): np.array([[2.0, 1.0], [1.0, 1.0]])})
    n = 14
    dom = estimate_spectrum_domain(c, n)
    assert dom.affine_dim == 2
    center = dom.hull_vertices.mean(axis=0)
    pt = legendre_entropy(c, center, n)
    assert pt.entropy == pytest.approx(level_set_entropy_oracle(c, center, n).value, abs=0.05)
