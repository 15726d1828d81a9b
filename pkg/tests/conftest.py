import numpy as np
import pytest
from hypothesis import settings, strategies as st

from bcclab.prob import Channel, Dist

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def random_dist(rng, size, alpha=0.7, sparse=False):
    p = rng.dirichlet(np.full(size, alpha))
    if sparse and size > 1:
        p[rng.random(size) < 0.3] = 0.0
        if p.sum() == 0:
            p[0] = 1.0
    return Dist.normalized(p)


def random_channel(rng, n_in, n_out, alpha=0.7, sparse=False):
    rows = rng.dirichlet(np.full(n_out, alpha), size=n_in)
    if sparse:
        rows[rng.random(rows.shape) < 0.25] = 0.0
        empty = rows.sum(axis=1) == 0
        rows[empty, 0] = 1.0
    return Channel.normalized(rows)


@st.composite
def dists(draw, min_size=1, max_size=5):
    size = draw(st.integers(min_size, max_size))
    w = draw(st.lists(st.floats(0.0, 1.0), min_size=size, max_size=size))
    w = np.asarray(w) + 1e-3 * (np.sum(w) == 0)
    return Dist.normalized(w)


@st.composite
def channels(draw, n_in=None, max_in=4, max_out=4):
    n_in = n_in if n_in is not None else draw(st.integers(1, max_in))
    n_out = draw(st.integers(1, max_out))
    rows = draw(st.lists(st.lists(st.floats(0.0, 1.0), min_size=n_out, max_size=n_out),
                         min_size=n_in, max_size=n_in))
    rows = np.asarray(rows)
    rows[rows.sum(axis=1) == 0, 0] = 1.0
    return Channel.normalized(rows)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
