"""Shared helpers: bundled fixture paths and random instance builders."""

from pathlib import Path

import numpy as np
import pytest

from musebench.shaping import (
    Dimension,
    MembershipMatrices,
    ShapingProblem,
    build_targets,
)

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


def random_problem(rng, *, k_max=20, dims_max=3, h_max=4, n_max=8) -> ShapingProblem:
    """Small random shaping instance inside the exhaustive-search regime."""
    k = int(rng.integers(4, k_max + 1))
    nd = int(rng.integers(1, dims_max + 1))
    dims = []
    for d in range(nd):
        h = int(rng.integers(2, h_max + 1))
        mat = (rng.random((h, k)) < 0.45).astype(np.int64)
        dims.append(Dimension(f"d{d}", mat))
    memberships = MembershipMatrices(tuple(dims), k)
    n = int(rng.integers(2, min(n_max, k) + 1))
    return ShapingProblem(memberships, build_targets(memberships, n))
