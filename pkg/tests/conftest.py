import numpy as np
import pytest

from liewalk import example_model


@pytest.fixture(scope="session")
def model():
    return example_model(1.0, 1.0)


@pytest.fixture(scope="session")
def dist(model):
    return model.distribution()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
