"""Shared fixtures for the calibkit test suite."""

import numpy as np
import pytest

from calibkit.core.design import BoxDomain, equispaced
from calibkit.core.kernels import KernelSpec
from calibkit.experiments import example1


@pytest.fixture
def interval():
    return BoxDomain.interval(-1.0, 1.0)


@pytest.fixture
def unit_interval():
    return BoxDomain.interval(0.0, 1.0)


@pytest.fixture
def gaussian():
    return KernelSpec.gaussian(1.0)


@pytest.fixture
def eleven_points(interval):
    return equispaced(interval, 11)


@pytest.fixture(scope="session")
def example1_eig():
    return example1.build_eigensystem()


@pytest.fixture(scope="session")
def example1_problem(example1_eig):
    return example1.example1_problem(11, example1_eig)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
