import numpy as np
import pytest
from hypothesis import strategies as st

from cstarcorr.algebra import make_algebra
from cstarcorr.module import HilbertModule


@st.composite
def modules(draw, max_blocks: int = 3, max_size: int = 3, max_mult: int = 3):
    dims = draw(st.lists(st.integers(1, max_size), min_size=1, max_size=max_blocks))
    mults = draw(st.lists(st.integers(0, max_mult), min_size=len(dims), max_size=len(dims)))
    if not any(mults):
        mults[0] = 1
    return HilbertModule(make_algebra(dims), tuple(mults))


seeds = st.integers(0, 2**32 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
