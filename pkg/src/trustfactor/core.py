"""Core domain types for partially observed trust networks.

A trust network is a directed graph over ``n`` users in which an edge
(trustor, trustee) carries a rating in [0, 1].  Only a subset of the
``n * (n - 1)`` ordered pairs is observed.  All types here are immutable
after construction and safe to share across threads; the observation set
is kept in a canonical (trustor, then trustee) sort order so every
downstream computation is reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

#: Number of specified (bias) factors: global, trustor, trustee.
NUM_SPECIFIED_FACTORS = 3


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TrustObservation:
    """One observed rating from ``trustor`` to ``trustee``."""

    trustor: int
    trustee: int
    rating: float

    def __post_init__(self):
        if self.trustor == self.trustee:
            raise ValidationError(f"self-loop: user {self.trustor} rating itself")
        if self.trustor < 0 or self.trustee < 0:
            raise ValidationError("user indices must be non-negative")
        if not 0.0 <= self.rating <= 1.0:
            raise ValidationError(f"rating {self.rating!r} outside [0, 1]")


class SparsityPattern:
    """Index structure of the observed (trustor, trustee) pairs.

    Pairs are stored row-major sorted with CSR-style row pointers.  The
    column-major twin (used when the trustee side plays the row role) is
    built lazily and cached, together with the permutation mapping
    row-major positions into it.
    """

    __slots__ = ("n", "rows", "cols", "row_ptr", "_transposed")

    def __init__(self, n: int, rows: np.ndarray, cols: np.ndarray):
        # rows/cols must already be validated and row-major sorted
        self.n = int(n)
        self.rows = _readonly(rows)
        self.cols = _readonly(cols)
        counts = np.bincount(rows, minlength=self.n) if rows.size else np.zeros(self.n, dtype=np.int64)
        ptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        self.row_ptr = _readonly(ptr)
        self._transposed = None

    def __len__(self) -> int:
        return self.rows.size

    def transposed(self) -> tuple["SparsityPattern", np.ndarray]:
        """Column-major twin plus the permutation from row-major positions."""
        if self._transposed is None:
            order = np.lexsort((self.rows, self.cols))
            twin = SparsityPattern(self.n, self.cols[order], self.rows[order])
            self._transposed = (twin, _readonly(order))
        return self._transposed


class SparseTrustMatrix:
    """Immutable, partially observed n-by-n trust matrix.

    Observations live in three parallel arrays sorted by (trustor,
    trustee).  ``labels``, when present, map the dense 0-based indices
    back to the user ids found in the source file.

    Raises :class:`ValidationError` on out-of-range indices, self-loops,
    ratings outside [0, 1], or duplicate (trustor, trustee) pairs.
    """

    __slots__ = ("pattern", "ratings", "labels", "_label_index")

    def __init__(
        self,
        n: int,
        trustors: Iterable[int],
        trustees: Iterable[int],
        ratings: Iterable[float],
        labels: Sequence[str] | None = None,
    ):
        i = np.ascontiguousarray(trustors, dtype=np.int64)
        j = np.ascontiguousarray(trustees, dtype=np.int64)
        v = np.ascontiguousarray(ratings, dtype=np.float64)
        if n < 0:
            raise ValidationError("user count must be non-negative")
        if not (i.size == j.size == v.size):
            raise ValidationError("trustor/trustee/rating arrays differ in length")
        if i.size:
            if i.min() < 0 or j.min() < 0 or i.max() >= n or j.max() >= n:
                raise ValidationError(f"user index out of range for n={n}")
            loops = np.flatnonzero(i == j)
            if loops.size:
                raise ValidationError(f"self-loop: user {i[loops[0]]} rating itself")
            if not np.all((v >= 0.0) & (v <= 1.0)):  # also rejects NaN
                bad = v[~((v >= 0.0) & (v <= 1.0))][0]
                raise ValidationError(f"rating {bad!r} outside [0, 1]")
        order = np.lexsort((j, i))
        i, j, v = i[order], j[order], v[order]
        dup = np.flatnonzero((np.diff(i) == 0) & (np.diff(j) == 0))
        if dup.size:
            raise ValidationError(
                f"duplicate pair ({i[dup[0]]}, {j[dup[0]]}): at most one observation per ordered pair"
            )
        if labels is not None:
            labels = tuple(str(lab) for lab in labels)
            if len(labels) != n:
                raise ValidationError(f"{len(labels)} labels for {n} users")
            if len(set(labels)) != n:
                raise ValidationError("user labels must be unique")
        self.pattern = SparsityPattern(n, i, j)
        self.ratings = _readonly(v)
        self.labels = labels
        self._label_index = {lab: k for k, lab in enumerate(labels)} if labels else None

    @classmethod
    def from_observations(
        cls,
        n: int,
        observations: Iterable[TrustObservation],
        labels: Sequence[str] | None = None,
    ) -> "SparseTrustMatrix":
        obs = list(observations)
        return cls(
            n,
            [o.trustor for o in obs],
            [o.trustee for o in obs],
            [o.rating for o in obs],
            labels=labels,
        )

    @property
    def n_users(self) -> int:
        return self.pattern.n

    @property
    def n_observations(self) -> int:
        return len(self.pattern)

    @property
    def trustors(self) -> np.ndarray:
        return self.pattern.rows

    @property
    def trustees(self) -> np.ndarray:
        return self.pattern.cols

    def out_edges(self, trustor: int) -> tuple[np.ndarray, np.ndarray]:
        """Trustees rated by ``trustor`` and the ratings they received."""
        lo, hi = self.pattern.row_ptr[trustor], self.pattern.row_ptr[trustor + 1]
        return self.pattern.cols[lo:hi], self.ratings[lo:hi]

    def in_edges(self, trustee: int) -> tuple[np.ndarray, np.ndarray]:
        """Trustors who rated ``trustee`` and the ratings they gave."""
        twin, order = self.pattern.transposed()
        lo, hi = twin.row_ptr[trustee], twin.row_ptr[trustee + 1]
        return twin.cols[lo:hi], self.ratings[order[lo:hi]]

    def index_of(self, label: str) -> int:
        if self._label_index is None:
            raise ValidationError("matrix carries no user labels")
        try:
            return self._label_index[label]
        except KeyError:
            raise ValidationError(f"unknown user label {label!r}") from None

    def label_of(self, index: int) -> str:
        return self.labels[index] if self.labels is not None else str(index)

    def __repr__(self) -> str:
        return f"SparseTrustMatrix(n={self.n_users}, observations={self.n_observations})"


def observed_pairs(matrix: SparseTrustMatrix) -> list[tuple[int, int, float]]:
    """All observed (trustor, trustee, rating) triples, sorted by trustor
    and then trustee."""
    return list(
        zip(
            matrix.trustors.tolist(),
            matrix.trustees.tolist(),
            matrix.ratings.tolist(),
        )
    )


@dataclass(frozen=True)
class BiasTerms:
    """Global, per-trustor, and per-trustee rating offsets."""

    global_bias: float
    trustor_bias: np.ndarray
    trustee_bias: np.ndarray

    def __post_init__(self):
        x = np.ascontiguousarray(self.trustor_bias, dtype=np.float64)
        y = np.ascontiguousarray(self.trustee_bias, dtype=np.float64)
        if x.ndim != 1 or y.ndim != 1 or x.size != y.size:
            raise ValidationError("bias vectors must be 1-D and of equal length")
        if not (np.isfinite(self.global_bias) and np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValidationError("bias terms must be finite")
        object.__setattr__(self, "global_bias", float(self.global_bias))
        object.__setattr__(self, "trustor_bias", _readonly(x))
        object.__setattr__(self, "trustee_bias", _readonly(y))

    @property
    def n_users(self) -> int:
        return self.trustor_bias.size

    @classmethod
    def zeros(cls, n: int) -> "BiasTerms":
        return cls(0.0, np.zeros(n), np.zeros(n))


@dataclass(frozen=True)
class FactorModel:
    """Everything needed for constant-time pair prediction.

    ``trustor_factors`` and ``trustee_factors`` are the learned n-by-rank
    latent matrices; ``coefficients`` holds the three learned weights for
    the specified bias factors (global, trustor, trustee).
    """

    n_users: int
    rank: int
    trustor_factors: np.ndarray
    trustee_factors: np.ndarray
    coefficients: np.ndarray
    bias: BiasTerms
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        F = np.ascontiguousarray(self.trustor_factors, dtype=np.float64)
        G = np.ascontiguousarray(self.trustee_factors, dtype=np.float64)
        c = np.ascontiguousarray(self.coefficients, dtype=np.float64)
        if self.rank < 1:
            raise ValidationError("rank must be at least 1")
        if F.shape != (self.n_users, self.rank) or G.shape != (self.n_users, self.rank):
            raise ValidationError(
                f"factor matrices must be {self.n_users}x{self.rank}, got {F.shape} and {G.shape}"
            )
        if c.shape != (NUM_SPECIFIED_FACTORS,):
            raise ValidationError(f"expected {NUM_SPECIFIED_FACTORS} bias coefficients")
        if self.bias.n_users != self.n_users:
            raise ValidationError("bias vectors do not match the user count")
        if not (np.all(np.isfinite(F)) and np.all(np.isfinite(G)) and np.all(np.isfinite(c))):
            raise ValidationError("factor model contains non-finite entries")
        if self.labels is not None and len(self.labels) != self.n_users:
            raise ValidationError(f"{len(self.labels)} labels for {self.n_users} users")
        object.__setattr__(self, "trustor_factors", _readonly(F))
        object.__setattr__(self, "trustee_factors", _readonly(G))
        object.__setattr__(self, "coefficients", _readonly(c))

    @property
    def n_specified_factors(self) -> int:
        return NUM_SPECIFIED_FACTORS

    @property
    def n_factors(self) -> int:
        """Total factor count: specified plus latent (derived, never stored)."""
        return NUM_SPECIFIED_FACTORS + self.rank

    def index_of(self, label: str) -> int:
        if self.labels is None:
            raise ValidationError("model carries no user labels")
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValidationError(f"unknown user label {label!r}") from None


@dataclass(frozen=True)
class HyperParams:
    """Training configuration.

    ``regularization`` is the ridge strength applied to both latent
    matrices and (shrunk, not scaled by the user count) to the bias
    coefficients.  ``max_outer_iters``/``outer_tol`` bound the outer
    alternation between matrix and coefficient updates;
    ``max_inner_iters``/``inner_tol`` bound the factor-matrix sweeps
    inside each outer step.  ``freeze_coefficients`` pins the three bias
    weights at 1 (the plain bias-aware collaborative-filtering special
    case); ``use_bias=False`` drops the bias terms entirely.
    """

    regularization: float = 1.0
    factors: int = 10
    max_outer_iters: int = 10
    max_inner_iters: int = 100
    outer_tol: float = 1e-6
    inner_tol: float = 1e-6
    use_bias: bool = True
    freeze_coefficients: bool = False
    rng_seed: int = 0
    random_init: bool = False
    threads: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.regularization) and self.regularization >= 0):
            raise ValidationError(f"regularization must be finite and >= 0, got {self.regularization}")
        if self.factors < 1:
            raise ValidationError(f"factor count must be >= 1, got {self.factors}")
        if self.max_outer_iters < 1 or self.max_inner_iters < 1:
            raise ValidationError("iteration limits must be >= 1")
        if self.outer_tol < 0 or self.inner_tol < 0:
            raise ValidationError("convergence tolerances must be >= 0")
        if self.threads < 1:
            raise ValidationError(f"threads must be >= 1, got {self.threads}")


@dataclass(frozen=True)
class ResidualMatrix:
    """Residual values defined on the same sparsity pattern as the
    training matrix they were derived from."""

    pattern: SparsityPattern
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.shape != (len(self.pattern),):
            raise ValidationError(
                f"expected {len(self.pattern)} residual values, got shape {v.shape}"
            )
        object.__setattr__(self, "values", _readonly(v))

    @property
    def n_users(self) -> int:
        return self.pattern.n

    def transpose(self) -> "ResidualMatrix":
        """Swap the trustor/trustee roles; O(|K|) for the value permutation."""
        twin, order = self.pattern.transposed()
        return ResidualMatrix(twin, self.values[order])
