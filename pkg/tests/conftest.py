from __future__ import annotations

import numpy as np
import pytest

from geocon.models import ModelSpec
from geocon.ndiff import GraphNeighbors


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


@pytest.fixture
def path4():
    """Path graph 0-1-2-3."""
    return GraphNeighbors(4, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def micro_spec():
    """Small bound spec used across gradient and equation tests."""
    return ModelSpec(kind="rgc", aggregator="mean", nlayers=1, hidden_dim=3,
                     dropout=0.0, lags=2, horizon=2, n_nodes=4, n_features=2)
