"""Shared fixtures: the small worked-example network and dataset discovery."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from trustfactor import SparseTrustMatrix

# Five-user example network (Alice..Elva as indices 0..4): eleven observed
# ratings, seven 1.0s and four 0.5s.  Alice rates everyone 1.0 and is rated
# 0.5 by everyone who rates her; (2, 0) and (3, 4) are deliberately left
# unobserved because the prediction tests infer them.
FIVE_USER_TRIPLES = [
    (0, 1, 1.0),
    (0, 2, 1.0),
    (0, 3, 1.0),
    (0, 4, 1.0),
    (1, 0, 0.5),
    (1, 2, 1.0),
    (1, 4, 0.5),
    (2, 1, 1.0),
    (3, 0, 0.5),
    (4, 0, 0.5),
    (4, 3, 1.0),
]

# Hand-constructed factor matrices consistent with the network above:
# Bob/Carol share one stereotype, David/Elva share the other, Alice
# spans both.  Products reproduce every observed rating exactly.
FIVE_USER_TRUSTOR_FACTORS = np.array(
    [[1.0, 1.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]
)
FIVE_USER_TRUSTEE_FACTORS = np.array(
    [[0.5, 0.5], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]
)


def build_matrix(n, triples, labels=None) -> SparseTrustMatrix:
    return SparseTrustMatrix(
        n,
        [t[0] for t in triples],
        [t[1] for t in triples],
        [t[2] for t in triples],
        labels=labels,
    )


@pytest.fixture
def five_user_matrix() -> SparseTrustMatrix:
    return build_matrix(5, FIVE_USER_TRIPLES)


def random_sparse_matrix(rng: np.random.Generator, max_n: int = 50) -> SparseTrustMatrix:
    """A random valid matrix with at least one observation."""
    n = int(rng.integers(2, max_n + 1))
    total = n * (n - 1)
    count = int(rng.integers(1, total + 1))
    ids = rng.choice(total, size=count, replace=False)
    rows = ids // (n - 1)
    offset = ids % (n - 1)
    cols = np.where(offset < rows, offset, offset + 1)
    return SparseTrustMatrix(n, rows, cols, rng.random(count))


def advogato_path() -> Path | None:
    """Location of the advogato-6 snapshot, if the user supplied one."""
    env = os.environ.get("TRUSTFACTOR_ADVOGATO")
    candidates = [Path(env)] if env else []
    candidates.append(Path(__file__).resolve().parent.parent / "data" / "advogato-6.tsv")
    for path in candidates:
        if path.is_file():
            return path
    return None
