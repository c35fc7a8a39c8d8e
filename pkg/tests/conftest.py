import pytest

from csaim.core import SampleSet
from csaim.dataset import DatasetSpec, generate


@pytest.fixture(scope="session")
def small_train():
    return generate(DatasetSpec(100, 100, seed=11))


@pytest.fixture(scope="session")
def small_test():
    return generate(DatasetSpec(100, 100, seed=12))


@pytest.fixture(scope="session")
def small_set(small_train):
    return SampleSet.from_samples(small_train)
