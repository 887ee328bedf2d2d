"""Bias estimation from the observed ratings.

Three quantities make up the specified factors: the community-wide mean
rating, each trustor's offset from it over the ratings they give, and
each trustee's offset over the ratings they receive.  Users with no
out-edges (resp. in-edges) get a zero trustor (resp. trustee) offset, so
their predictions fall back to the remaining terms.
"""

from __future__ import annotations

import numpy as np

from .core import BiasTerms, SparseTrustMatrix
from .errors import ValidationError


def compute_bias(matrix: SparseTrustMatrix) -> BiasTerms:
    """Estimate global, trustor, and trustee bias from observed ratings.

    Sums run in the canonical row-major observation order, so results are
    bit-reproducible across runs.
    """
    if matrix.n_observations == 0:
        raise ValidationError("cannot estimate bias from an empty observation set")
    n = matrix.n_users
    ratings = matrix.ratings
    mu = float(ratings.sum() / ratings.size)

    out_sum = np.bincount(matrix.trustors, weights=ratings, minlength=n)
    out_cnt = np.bincount(matrix.trustors, minlength=n)
    in_sum = np.bincount(matrix.trustees, weights=ratings, minlength=n)
    in_cnt = np.bincount(matrix.trustees, minlength=n)

    x = np.where(out_cnt > 0, out_sum / np.maximum(out_cnt, 1) - mu, 0.0)
    y = np.where(in_cnt > 0, in_sum / np.maximum(in_cnt, 1) - mu, 0.0)
    return BiasTerms(mu, x, y)
