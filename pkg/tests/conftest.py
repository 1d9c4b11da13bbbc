import numpy as np
import pytest

from hybridsparse import SpMat, convert, counters

from oracles import EXAMPLE_TRIPLETS

# every conversion output in the suite gets a full invariant audit
convert.DEBUG = True


@pytest.fixture
def example():
    return SpMat.from_triplets(5, 4, EXAMPLE_TRIPLETS)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def _fresh_counters():
    counters.reset()
    yield
