from __future__ import annotations

import numpy as np
import pytest

from bta.engine import initial_state
from bta.model import Dataset, Family, ModelSpec, Outcome, Theory


def mixed_problem(seed: int = 0, n: int = 40, missing: float = 0.2):
    """Two theories, one outcome of each family, some outcomes missing."""
    rng = np.random.default_rng(seed)
    spec = ModelSpec(
        (Theory("A", ("a1", "a2", "a3")), Theory("B", ("b1", "b2"), nu=0.7)),
        (Outcome("d", Family.LOGISTIC), Outcome("q", Family.QUANTILE, tau=0.8), Outcome("g", Family.GEV)),
    )
    X = [rng.normal(size=(n, 3)), rng.normal(size=(n, 2))]
    I = np.column_stack([X[0] @ [1.0, -0.5, 0.0], X[1] @ [0.8, 0.0]]) + rng.normal(size=(n, 2))
    Y = np.column_stack([
        rng.random(n) < 1 / (1 + np.exp(-(I[:, 0] + I[:, 1]))),
        1 + I[:, 0] + rng.normal(size=n),
        0.5 + 0.3 * I[:, 1] + rng.gumbel(size=n) * 0.5,
    ]).astype(float)
    mask = rng.random((n, 3)) >= missing
    return spec, Dataset(X, Y, mask)


@pytest.fixture
def problem():
    return mixed_problem()


@pytest.fixture
def state(problem):
    spec, data = problem
    return initial_state(spec, data)
