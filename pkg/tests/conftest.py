import numpy as np
import pytest

from rankregions import LabeledSample, RngStream, backend_name
from rankregions.experiments import gen_gaussian_mixture


def pytest_report_header(config):
    return f"rankregions kernel backend: {backend_name()}"


@pytest.fixture(scope="session")
def gauss500():
    """One fixed n=500 Gaussian-mixture sample shared by the optimizer tests."""
    return gen_gaussian_mixture(500, RngStream(2024, 0))


@pytest.fixture
def tiny_sample():
    return LabeledSample(inputs=np.array([0.0, 1.0, 2.0]), labels=np.array([1.0, -1.0, 1.0]))
