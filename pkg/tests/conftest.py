import numpy as np
import pytest

from hdlss.energy_stats import TrainingSet, compute_train_stats


@pytest.fixture
def hand_training():
    """d=1 example with X={0,2}, Y={1,3}; every statistic is enumerable by hand."""
    return TrainingSet(np.array([[0.0], [2.0]]), np.array([[1.0], [3.0]]))


@pytest.fixture
def hand_stats(hand_training):
    return compute_train_stats(hand_training)


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)
