"""Shared test fixtures and dataset builders."""

from __future__ import annotations

import numpy as np
import pytest

from clustercrit.data import ClusteredDataset, Hypothesis


def make_dataset(rng, G=5, k=2, min_rows=1, max_rows=5, scale=1.0):
    """Random well-conditioned clustered dataset."""
    sizes = rng.integers(min_rows, max_rows + 1, size=G)
    N = int(sizes.sum())
    x = rng.normal(size=(N, k))
    y = rng.normal(size=N) * scale
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    return ClusteredDataset(y, x, offsets, tuple(f"c{g}" for g in range(G)))


def make_hypothesis(rng, k, alpha=0.05):
    lam = rng.normal(size=k)
    while not np.any(lam != 0):
        lam = rng.normal(size=k)
    return Hypothesis(lam, float(rng.normal()), alpha)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
