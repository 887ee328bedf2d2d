"""Constant-time scoring from a trained factor model.

Each prediction touches one row of each factor matrix plus three bias
terms, so the cost depends on the rank only, never on the user count or
the number of training observations.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .core import FactorModel
from .errors import ValidationError


def _check_pair(model: FactorModel, trustor: int, trustee: int) -> None:
    if not (0 <= trustor < model.n_users and 0 <= trustee < model.n_users):
        raise ValidationError(
            f"pair ({trustor}, {trustee}) out of range for n={model.n_users}"
        )
    if trustor == trustee:
        raise ValidationError(f"self-pair ({trustor}, {trustee}) is not scorable")


def predict_pair(model: FactorModel, trustor: int, trustee: int, clamp: bool = False) -> float:
    """Predicted trustworthiness score from ``trustor`` to ``trustee``.

    With ``clamp`` the raw score is clipped into [0, 1].
    """
    _check_pair(model, trustor, trustee)
    c = model.coefficients
    b = model.bias
    value = float(
        np.einsum("i,i->", model.trustor_factors[trustor], model.trustee_factors[trustee])
        + c[0] * b.global_bias
        + c[1] * b.trustor_bias[trustor]
        + c[2] * b.trustee_bias[trustee]
    )
    if clamp:
        value = min(1.0, max(0.0, value))
    return value


def predict_batch(
    model: FactorModel, pairs: Iterable[Sequence[int]], clamp: bool = False
) -> np.ndarray:
    """Element-wise :func:`predict_pair` over an ordered pair sequence.

    The first invalid pair is reported with its position.
    """
    pair_arr = np.asarray(list(pairs), dtype=np.int64)
    if pair_arr.size == 0:
        return np.empty(0, dtype=np.float64)
    if pair_arr.ndim != 2 or pair_arr.shape[1] != 2:
        raise ValidationError("pairs must be (trustor, trustee) tuples")
    us, vs = pair_arr[:, 0], pair_arr[:, 1]
    bad = (us < 0) | (us >= model.n_users) | (vs < 0) | (vs >= model.n_users) | (us == vs)
    if bad.any():
        k = int(np.argmax(bad))
        try:
            _check_pair(model, int(us[k]), int(vs[k]))
        except ValidationError as exc:
            raise ValidationError(f"pair #{k}: {exc}") from None
    c = model.coefficients
    b = model.bias
    scores = (
        np.einsum("ij,ij->i", model.trustor_factors[us], model.trustee_factors[vs])
        + c[0] * b.global_bias
        + c[1] * b.trustor_bias[us]
        + c[2] * b.trustee_bias[vs]
    )
    if clamp:
        np.clip(scores, 0.0, 1.0, out=scores)
    return scores


def objective_scores(model: FactorModel) -> np.ndarray:
    """One community-wide trustworthiness score per trustee.

    This is the prediction an average trustor would give each user: the
    trustee factors are combined with the column-wise mean of the trustor
    factors, keeping the global and trustee bias terms while the
    trustor-specific bias averages out.
    """
    mean_trustor = model.trustor_factors.mean(axis=0)
    c = model.coefficients
    b = model.bias
    return (
        model.trustee_factors @ mean_trustor
        + c[0] * b.global_bias
        + c[2] * b.trustee_bias
    )
