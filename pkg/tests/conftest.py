"""Shared fixtures; heavy band-structure objects are computed once per session."""

import pytest

from blochsim import mathieu_bands as mb


@pytest.fixture(scope="session")
def prob3():
    return mb.MathieuProblem.from_depth(3.0)


@pytest.fixture(scope="session")
def prob10():
    return mb.MathieuProblem.from_depth(10.0)


@pytest.fixture(scope="session")
def bands3(prob3):
    return mb.band_edges(prob3, 3)


@pytest.fixture(scope="session")
def bands10(prob10):
    return mb.band_edges(prob10, 3)


@pytest.fixture(scope="session")
def wannier3(prob3, bands3):
    return mb.wannier_first_band(prob3, edges=bands3)


@pytest.fixture(scope="session")
def wannier10(prob10, bands10):
    return mb.wannier_first_band(prob10, edges=bands10)
