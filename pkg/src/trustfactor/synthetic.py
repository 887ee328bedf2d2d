"""Synthetic trust networks with planted structure.

The generator draws a bias-plus-low-rank ground truth, clips it into
[0, 1], and reveals a uniform sample of off-diagonal pairs.  It backs
the recovery, ablation, and scalability tests: the planted parameters
are returned alongside the matrix so prediction quality can be checked
against a known answer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SparseTrustMatrix
from .errors import ValidationError


@dataclass(frozen=True)
class PlantedTruth:
    """Ground-truth parameters behind a generated matrix."""

    global_bias: float
    trustor_bias: np.ndarray
    trustee_bias: np.ndarray
    coefficients: tuple[float, float, float]
    trustor_factors: np.ndarray
    trustee_factors: np.ndarray

    def dense(self) -> np.ndarray:
        """Full clipped score matrix (diagonal included, for reference)."""
        c = self.coefficients
        raw = (
            c[0] * self.global_bias
            + c[1] * self.trustor_bias[:, None]
            + c[2] * self.trustee_bias[None, :]
            + self.trustor_factors @ self.trustee_factors.T
        )
        return np.clip(raw, 0.0, 1.0)


def _sample_pairs(rng: np.random.Generator, n: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform sample of ``count`` distinct off-diagonal ordered pairs."""
    total = n * (n - 1)
    if count > total:
        raise ValidationError(f"cannot place {count} observations among {total} ordered pairs")
    if total <= 4_000_000 or count * 3 > total:
        ids = rng.choice(total, size=count, replace=False)
    else:
        # rejection sampling keeps memory at O(count) for large n
        ids = np.unique(rng.integers(0, total, size=int(count * 1.3) + 16))
        while ids.size < count:
            extra = rng.integers(0, total, size=count)
            ids = np.unique(np.concatenate([ids, extra]))
        ids = rng.permutation(ids)[:count]
    rows = ids // (n - 1)
    offset = ids % (n - 1)
    cols = np.where(offset < rows, offset, offset + 1)
    return rows, cols


def make_planted_matrix(
    n: int,
    rank: int,
    n_obs: int | None = None,
    density: float | None = None,
    seed: int = 0,
    global_bias: float = 0.55,
    trustor_scale: float = 0.15,
    trustee_scale: float = 0.15,
    factor_scale: float = 0.3,
    coefficients: tuple[float, float, float] = (1.0, 1.0, 1.0),
    noise: float = 0.0,
) -> tuple[SparseTrustMatrix, PlantedTruth]:
    """Generate a partially observed matrix with known structure.

    Exactly one of ``n_obs`` (observation count) or ``density`` (fraction
    of the n*(n-1) ordered pairs) selects the sample size.  Bias vectors
    are centered normal draws; factor entries are scaled so the latent
    part contributes about ``factor_scale`` regardless of rank.
    ``noise`` adds per-observation Gaussian error before clipping, giving
    the data an irreducible error floor like real rating networks have;
    at the default 0 the observations follow the planted model exactly.
    """
    if (n_obs is None) == (density is None):
        raise ValidationError("specify exactly one of n_obs or density")
    if n < 2:
        raise ValidationError("need at least 2 users")
    count = n_obs if n_obs is not None else int(round(density * n * (n - 1)))
    if count < 1:
        raise ValidationError("observation count must be >= 1")

    rng = np.random.default_rng(seed)
    x = rng.normal(0.0, trustor_scale, n)
    x -= x.mean()
    y = rng.normal(0.0, trustee_scale, n)
    y -= y.mean()
    F = rng.normal(0.0, factor_scale / np.sqrt(rank), (n, rank))
    G = rng.normal(0.0, factor_scale / np.sqrt(rank), (n, rank))

    rows, cols = _sample_pairs(rng, n, count)
    c = coefficients
    raw = (
        c[0] * global_bias
        + c[1] * x[rows]
        + c[2] * y[cols]
        + np.einsum("ij,ij->i", F[rows], G[cols])
    )
    if noise:
        raw = raw + rng.normal(0.0, noise, raw.size)
    values = np.clip(raw, 0.0, 1.0)
    matrix = SparseTrustMatrix(n, rows, cols, values)
    truth = PlantedTruth(global_bias, x, y, tuple(float(v) for v in c), F, G)
    return matrix, truth
