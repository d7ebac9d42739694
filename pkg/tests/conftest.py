import numpy as np
import pytest
from hypothesis import settings, strategies as st

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


finite = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)
seeds = st.integers(0, 2**32 - 1)


def naive_matmul(a, b):
    """Entrywise 2x2 product, used as an oracle for numpy's ``@``."""
    out = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            out[i, j] = sum(a[i, k] * b[k, j] for k in range(2))
    return out
