import numpy as np
import pytest

from vecfuse.matrixio import LabeledMatrix


@pytest.fixture
def rng():
    return np.random.RandomState(20160406)


def make_matrix(labels, rows, ranks="auto"):
    data = np.asarray(rows, dtype=np.float32)
    if data.ndim == 1:
        data = data.reshape(len(labels), -1)
    if ranks == "auto":
        ranks = np.arange(1, len(labels) + 1)
    return LabeledMatrix(labels=list(labels), data=data, source_rank=ranks)


def bits_equal(a, b):
    a = np.asarray(a, dtype=np.float32)
    b = np.asarray(b, dtype=np.float32)
    return a.shape == b.shape and np.array_equal(a.view(np.uint32), b.view(np.uint32))
