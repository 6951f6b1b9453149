from __future__ import annotations

import math

import numpy as np
import pytest

from qweights.profiles import powers_canonical
from qweights.qweight import RankOneQWeight, RankTwoQWeight, TGrid
from qweights.weights import BoundaryWeight


@pytest.fixture(scope="session")
def grid() -> TGrid:
    return TGrid()


@pytest.fixture(scope="session")
def coarse_grid() -> TGrid:
    return TGrid(1e-5, 5.0, 10)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(0xC0FFEE)


@pytest.fixture(scope="session")
def mu0() -> BoundaryWeight:
    return BoundaryWeight.from_terms(1, [(1.0, (1.0,), powers_canonical())])


@pytest.fixture(scope="session")
def canonical_qw(mu0) -> RankOneQWeight:
    return RankOneQWeight(np.eye(1), mu0)


@pytest.fixture(scope="session")
def canonical_qw_c2() -> RankOneQWeight:
    can = powers_canonical()
    mu = BoundaryWeight.from_terms(2, [(0.5, (1, 0), can), (0.5, (0, 1), can)])
    return RankOneQWeight(np.eye(2), mu)


@pytest.fixture(scope="session")
def rank_two_generic() -> RankTwoQWeight:
    can = powers_canonical()
    e1 = np.diag([1.0, 0.0])
    e2 = np.diag([0.0, 1.0])
    mu1 = BoundaryWeight.from_terms(2, [(0.5, (1, 0), can), (0.1, (0, 1), can)])
    mu2 = BoundaryWeight.from_terms(2, [(0.2, (1, 0), can), (0.4, (0, 1), can)])
    return RankTwoQWeight(e1, e2, mu1, mu2)


def powers_id_value(t: float) -> float:
    """mu0|_t(I) = -ln(1 - e^{-t})."""
    return -math.log(-math.expm1(-t))


def powers_lambda_value(t: float) -> float:
    """mu0|_t(Lambda) = -ln(1 - e^{-t}) - e^{-t}."""
    return powers_id_value(t) - math.exp(-t)
