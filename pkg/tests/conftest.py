from __future__ import annotations

import numpy as np
import pytest

from bpmatch.harness import code_context


@pytest.fixture(scope="session")
def d3():
    """``(code, metric_Z, metric_X)`` for distance 3."""
    return code_context(3)


@pytest.fixture(scope="session")
def d5():
    return code_context(5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_weights(rng, s: int, low: int = 1, high: int = 9) -> np.ndarray:
    """Symmetric integer weight matrix with boundary weights on the diagonal."""
    w = rng.integers(low, high + 1, size=(s, s))
    w = np.triu(w) + np.triu(w, 1).T
    return w


def enumerate_matchings(s: int):
    """Every perfect matching of detection nodes, as lists of (i, j) with j=None for the boundary."""
    def rec(remaining):
        if not remaining:
            yield []
            return
        i, rest = remaining[0], remaining[1:]
        for tail in rec(rest):
            yield [(i, None)] + tail
        for pos, j in enumerate(rest):
            for tail in rec(rest[:pos] + rest[pos + 1:]):
                yield [(i, j)] + tail
    yield from rec(list(range(s)))
