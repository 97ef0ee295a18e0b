from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from matcocycle import CocycleSpec, HomoclinicPointSym, PeriodicPointSym, SubshiftSpec

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


@pytest.fixture
def scalar23():
    return CocycleSpec(SubshiftSpec.full(2), {(0,): [[2.0]], (1,): [[3.0]]})


@pytest.fixture
def commuting_pair():
    return CocycleSpec(SubshiftSpec.full(2), {(0,): np.diag([2.0, 1.0]), (1,): np.diag([1.0, 2.0])})


@pytest.fixture
def typical_pair():
    return CocycleSpec(SubshiftSpec.full(2), {(0,): np.diag([2.0, 0.5]), (1,): np.array([[2.0, 1.0], [1.0, 1.0]])})


@pytest.fixture
def typical_points():
    p = PeriodicPointSym((0,))
    return p, HomoclinicPointSym(p, (1,), 2)


@pytest.fixture
def dominated_pair():
    return CocycleSpec(SubshiftSpec.full(2), {(0,): np.diag([4.0, 1.0]), (1,): np.diag([3.0, 1.0])})


@pytest.fixture
def rotations():
    return CocycleSpec(SubshiftSpec.full(2), {(0,): rotation(0.7), (1,): rotation(1.3)})


@pytest.fixture
def positive_pair():
    return CocycleSpec(SubshiftSpec.full(2), {(0,): np.array([[2.0, 1.0], [1.0, 1.0]]),
                                              (1,): np.array([[1.0, 1.0], [1.0, 2.0]])})


@pytest.fixture
def two_sided_bunched():
    """Window ``x_{-1} x_0`` with generators close to the identity, fiber bunched for alpha = 1."""
    gens = {(0, 0): np.array([[1.1, 0.1], [0.0, 1.0]]),
            (0, 1): np.array([[1.0, 0.0], [0.2, 0.9]]),
            (1, 0): np.array([[0.95, 0.05], [0.1, 1.05]]),
            (1, 1): np.array([[1.05, -0.1], [0.0, 1.0]])}
    return CocycleSpec(SubshiftSpec.full(2), gens, holder_alpha=1.0, offset=-1)
