import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_matrix(rng, p, n, scale=1.0):
    return scale * rng.standard_normal((p, n))


def make_dataset(values, missing=None, prefix=("g", "s")):
    from explomics.dataset import Dataset

    values = np.asarray(values, dtype=float)
    if missing is None:
        missing = np.zeros_like(values, dtype=bool)
    p, n = values.shape
    return Dataset(
        values,
        missing,
        tuple(f"{prefix[0]}{i+1}" for i in range(p)),
        tuple(f"{prefix[1]}{j+1}" for j in range(n)),
    )
