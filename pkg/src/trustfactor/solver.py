"""Training engine: alternating optimization of latent factors and bias
coefficients.

The fitted objective is the squared error over observed pairs plus ridge
penalties: on the latent matrices, on the (fixed) bias columns, and on
the three bias coefficients.  The coefficient penalty uses the plain
regularization strength rather than scaling it by the user count, which
keeps the bias terms from being regularized away on large networks; the
traced objective uses the same convention so every block update is an
exact minimization of the quantity being traced.

The joint problem is not convex, so training alternates exact block
minimizations: per-row ridge updates of the factor matrices (each row is
an independent subproblem), then a 3-parameter ridge fit of the
coefficients.  Each block step can only lower the objective; the
per-sub-step monotonicity checks in the test suite pin this down.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bias import compute_bias
from .core import (
    NUM_SPECIFIED_FACTORS,
    BiasTerms,
    FactorModel,
    HyperParams,
    ResidualMatrix,
    SparseTrustMatrix,
)
from .errors import SingularSystemError, ValidationError


@dataclass(frozen=True)
class RegressionSystem:
    """Stacked design for the coefficient fit: one row (global, trustor,
    trustee bias) per observed pair, in the canonical observation order."""

    design: np.ndarray   # |K| x 3
    targets: np.ndarray  # |K|


@dataclass
class TraceStep:
    label: str
    objective: float


@dataclass
class OuterRecord:
    iteration: int
    objective: float
    coefficients: tuple[float, float, float]
    delta: float
    coefficient_fallback: bool


@dataclass
class TrainTrace:
    """Objective values after every sub-step plus per-outer-iteration
    summaries (coefficients, successive-estimate delta, fallback flag)."""

    steps: list[TraceStep] = field(default_factory=list)
    outer: list[OuterRecord] = field(default_factory=list)

    def objectives(self) -> list[float]:
        return [s.objective for s in self.steps]

    def max_increase(self) -> float:
        """Largest objective rise between consecutive sub-steps (0 if none)."""
        vals = self.objectives()
        if len(vals) < 2:
            return 0.0
        return max(0.0, float(np.max(np.diff(vals))))


def objective_value(
    matrix: SparseTrustMatrix,
    bias: BiasTerms,
    coefficients: np.ndarray,
    F: np.ndarray,
    G: np.ndarray,
    regularization: float,
) -> float:
    """Full training objective for the given parameter state."""
    i, j = matrix.trustors, matrix.trustees
    c = coefficients
    pred = (
        c[0] * bias.global_bias
        + c[1] * bias.trustor_bias[i]
        + c[2] * bias.trustee_bias[j]
        + np.einsum("ij,ij->i", F[i], G[j])
    )
    resid = matrix.ratings - pred
    penalty = (
        float(np.sum(F * F)) + float(np.sum(G * G))
        + float(np.dot(c, c))
        + matrix.n_users * bias.global_bias ** 2
        + float(np.dot(bias.trustor_bias, bias.trustor_bias))
        + float(np.dot(bias.trustee_bias, bias.trustee_bias))
    )
    return float(np.dot(resid, resid)) + regularization * penalty


def latent_residuals(
    matrix: SparseTrustMatrix, bias: BiasTerms, coefficients: np.ndarray
) -> ResidualMatrix:
    """Ratings minus the weighted bias combination, on the observed pattern."""
    c = np.asarray(coefficients, dtype=np.float64)
    if c.shape != (NUM_SPECIFIED_FACTORS,):
        raise ValidationError(f"expected {NUM_SPECIFIED_FACTORS} coefficients, got shape {c.shape}")
    if bias.n_users != matrix.n_users:
        raise ValidationError("bias vectors do not match the matrix dimensions")
    explained = (
        c[0] * bias.global_bias
        + c[1] * bias.trustor_bias[matrix.trustors]
        + c[2] * bias.trustee_bias[matrix.trustees]
    )
    return ResidualMatrix(matrix.pattern, matrix.ratings - explained)


def coefficient_residuals(
    matrix: SparseTrustMatrix, F: np.ndarray, G: np.ndarray
) -> ResidualMatrix:
    """Ratings minus the latent reconstruction, on the observed pattern."""
    n = matrix.n_users
    if F.ndim != 2 or F.shape != G.shape or F.shape[0] != n:
        raise ValidationError(
            f"factor matrices must both be {n}x r, got {F.shape} and {G.shape}"
        )
    recon = np.einsum("ij,ij->i", F[matrix.trustors], G[matrix.trustees])
    return ResidualMatrix(matrix.pattern, matrix.ratings - recon)


def _solve_rows(
    active: np.ndarray,
    row_ptr: np.ndarray,
    gathered: np.ndarray,
    values: np.ndarray,
    regularization: float,
    out: np.ndarray,
) -> None:
    """Assemble and solve the ridge systems for one contiguous chunk of
    active rows, writing solutions into ``out`` (disjoint rows per chunk)."""
    r = gathered.shape[1]
    lo = row_ptr[active[0]]
    hi = row_ptr[active[-1] + 1]
    starts = (row_ptr[active] - lo).astype(np.intp)
    seg_G = gathered[lo:hi]
    seg_v = values[lo:hi]

    gram = np.empty((active.size, r, r))
    rhs = np.empty((active.size, r))
    for a in range(r):
        col_a = seg_G[:, a]
        for b in range(a, r):
            s = np.add.reduceat(col_a * seg_G[:, b], starts)
            gram[:, a, b] = s
            if b != a:
                gram[:, b, a] = s
        rhs[:, a] = np.add.reduceat(col_a * seg_v, starts)
    if regularization:
        diag = np.arange(r)
        gram[:, diag, diag] += regularization
    try:
        solution = np.linalg.solve(gram, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        for k, row in enumerate(active):
            if np.linalg.matrix_rank(gram[k]) < r:
                raise SingularSystemError(
                    f"singular {r}x{r} system for row {row} at zero regularization; "
                    "increase the regularization or the row's observation count"
                ) from None
        raise
    out[active] = solution


def row_ridge_update(
    residuals: ResidualMatrix,
    current: np.ndarray,
    fixed: np.ndarray,
    regularization: float,
    threads: int = 1,
) -> np.ndarray:
    """Exact per-row ridge update of the row-side factor matrix.

    Every row with at least one observation gets the global minimizer of
    its decoupled least-squares problem against ``fixed``; rows with no
    observations are returned unchanged.  Rows are independent, so any
    processing order (or chunked threading) yields bit-identical output.
    """
    if regularization < 0:
        raise ValidationError("regularization must be >= 0")
    n = residuals.n_users
    if current.shape != fixed.shape or current.ndim != 2 or current.shape[0] != n:
        raise ValidationError(
            f"factor matrices must both be {n} x r, got {current.shape} and {fixed.shape}"
        )
    updated = current.copy()
    row_ptr = residuals.pattern.row_ptr
    active = np.flatnonzero(np.diff(row_ptr) > 0)
    if active.size == 0:
        return updated
    gathered = fixed[residuals.pattern.cols]
    chunks = np.array_split(active, min(threads, active.size))
    if len(chunks) == 1:
        _solve_rows(chunks[0], row_ptr, gathered, residuals.values, regularization, updated)
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            futures = [
                pool.submit(_solve_rows, c, row_ptr, gathered, residuals.values, regularization, updated)
                for c in chunks
            ]
            for f in futures:
                f.result()
    return updated


def initial_factors(n: int, rank: int, hp: HyperParams) -> tuple[np.ndarray, np.ndarray]:
    """Seeded starting point for the factor matrices.

    Default is 1/rank plus a small uniform perturbation: the flat 1/rank
    start is a saddle for rank > 1, and the perturbation breaks the
    symmetry while staying reproducible.  ``hp.random_init`` switches to
    plain uniform [0, 1) entries.
    """
    rng = np.random.default_rng(hp.rng_seed)
    if hp.random_init:
        return rng.random((n, rank)), rng.random((n, rank))
    base = 1.0 / rank
    spread = 1.0 / (10.0 * rank)
    F = base + rng.uniform(-spread, spread, (n, rank))
    G = base + rng.uniform(-spread, spread, (n, rank))
    return F, G


def update_matrices(
    residuals: ResidualMatrix,
    rank: int,
    hp: HyperParams,
    initial: tuple[np.ndarray, np.ndarray] | None = None,
    objective_cb=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Alternating per-row ridge sweeps on the two factor matrices.

    Runs until the combined Frobenius-norm change of one full sweep drops
    below ``hp.inner_tol`` or ``hp.max_inner_iters`` sweeps elapse.
    ``initial`` warm-starts the sweeps; ``objective_cb(phase, F, G)`` is
    invoked after each half-sweep for objective tracing.
    """
    if rank < 1:
        raise ValidationError("rank must be >= 1")
    if initial is None:
        F, G = initial_factors(residuals.n_users, rank, hp)
    else:
        F, G = initial[0].copy(), initial[1].copy()
    transposed = residuals.transpose()
    for _ in range(hp.max_inner_iters):
        F_new = row_ridge_update(residuals, F, G, hp.regularization, hp.threads)
        if objective_cb is not None:
            objective_cb("rows", F_new, G)
        G_new = row_ridge_update(transposed, G, F_new, hp.regularization, hp.threads)
        if objective_cb is not None:
            objective_cb("cols", F_new, G_new)
        delta = float(np.sqrt(np.sum((F_new - F) ** 2) + np.sum((G_new - G) ** 2)))
        F, G = F_new, G_new
        if delta < hp.inner_tol:
            break
    return F, G


def build_regression_system(residuals: ResidualMatrix, bias: BiasTerms) -> RegressionSystem:
    """Design matrix and targets for the coefficient ridge fit."""
    if bias.n_users != residuals.n_users:
        raise ValidationError("bias vectors do not match the residual dimensions")
    rows = residuals.pattern.rows
    cols = residuals.pattern.cols
    design = np.column_stack(
        (
            np.full(len(residuals.pattern), bias.global_bias),
            bias.trustor_bias[rows],
            bias.trustee_bias[cols],
        )
    )
    return RegressionSystem(design, residuals.values)


def update_coefficients(
    residuals: ResidualMatrix, bias: BiasTerms, regularization: float
) -> tuple[np.ndarray, bool]:
    """Exact ridge fit of the three bias coefficients.

    Returns the coefficients and whether the normal equations were
    singular (possible only at zero regularization, e.g. when a bias
    vector is identically zero) and a pseudo-inverse was used instead.
    """
    if len(residuals.pattern) == 0:
        raise ValidationError("cannot fit coefficients with no observations")
    system = build_regression_system(residuals, bias)
    A, b = system.design, system.targets
    gram = A.T @ A + regularization * np.eye(NUM_SPECIFIED_FACTORS)
    rhs = A.T @ b
    try:
        return np.linalg.solve(gram, rhs), False
    except np.linalg.LinAlgError:
        return np.linalg.pinv(gram) @ rhs, True


def train(matrix: SparseTrustMatrix, hp: HyperParams) -> tuple[FactorModel, TrainTrace]:
    """Fit a factor model to the observed ratings.

    Alternates between (a) solving for the latent matrices against the
    bias-adjusted residuals and (b) refitting the bias coefficients
    against the latent-adjusted residuals, until the combined change in
    all learned parameters drops below ``hp.outer_tol`` or
    ``hp.max_outer_iters`` rounds elapse.  The factor matrices carry over
    between rounds, so every traced sub-step is a descent step.

    With ``hp.freeze_coefficients`` the coefficients stay at 1 and only
    the matrices are learned; with ``use_bias=False`` bias terms and
    coefficients are zeroed and the plain factorization is fitted.

    Returns the immutable model plus the training trace.
    """
    if matrix.n_observations == 0:
        raise ValidationError("cannot train on an empty observation set")
    n = matrix.n_users
    reg = hp.regularization
    if hp.use_bias:
        bias = compute_bias(matrix)
        coefficients = np.ones(NUM_SPECIFIED_FACTORS)
    else:
        bias = BiasTerms.zeros(n)
        coefficients = np.zeros(NUM_SPECIFIED_FACTORS)

    F, G = initial_factors(n, hp.factors, hp)
    trace = TrainTrace()

    def record(label: str, F_cur: np.ndarray, G_cur: np.ndarray) -> None:
        trace.steps.append(
            TraceStep(label, objective_value(matrix, bias, coefficients, F_cur, G_cur, reg))
        )

    record("init", F, G)
    for iteration in range(1, hp.max_outer_iters + 1):
        F_prev, G_prev, coeff_prev = F, G, coefficients
        residuals = latent_residuals(matrix, bias, coefficients)
        sweep = [0]

        def traced(phase: str, F_cur: np.ndarray, G_cur: np.ndarray, _it=iteration):
            if phase == "rows":
                sweep[0] += 1
            record(f"outer{_it}.sweep{sweep[0]}.{phase}", F_cur, G_cur)

        F, G = update_matrices(residuals, hp.factors, hp, initial=(F, G), objective_cb=traced)
        fallback = False
        if hp.use_bias and not hp.freeze_coefficients:
            coefficients, fallback = update_coefficients(
                coefficient_residuals(matrix, F, G), bias, reg
            )
            record(f"outer{iteration}.coefficients", F, G)
        # successive-estimate distance over all learned parameters; the
        # coefficient columns span n rows each, hence the factor of n
        delta = float(
            np.sqrt(
                np.sum((F - F_prev) ** 2)
                + np.sum((G - G_prev) ** 2)
                + n * np.sum((coefficients - coeff_prev) ** 2)
            )
        )
        trace.outer.append(
            OuterRecord(
                iteration,
                trace.steps[-1].objective,
                tuple(float(c) for c in coefficients),
                delta,
                fallback,
            )
        )
        if delta < hp.outer_tol:
            break

    model = FactorModel(
        n_users=n,
        rank=hp.factors,
        trustor_factors=F,
        trustee_factors=G,
        coefficients=coefficients,
        bias=bias,
        labels=matrix.labels,
    )
    return model, trace
