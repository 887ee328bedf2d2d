"""Scalability and latency harnesses.

``scale_run`` times full training runs over increasing synthetic sizes
(the training cost should grow linearly in both the user count and the
observation count at fixed rank and iteration limits).  ``query_latency``
measures per-call prediction cost, which should not depend on either.
Both run single-threaded unless the hyperparameters say otherwise, so
scaling is not confounded by parallelism.
"""

from __future__ import annotations

import time
import tracemalloc
from dataclasses import dataclass

import numpy as np

from .core import BiasTerms, FactorModel, HyperParams
from .errors import ValidationError
from .predict import predict_pair
from .solver import train
from .synthetic import make_planted_matrix


@dataclass(frozen=True)
class ScalePoint:
    n_users: int
    n_observations: int
    seconds: float
    peak_bytes: int | None


@dataclass(frozen=True)
class LatencyStats:
    trials: int
    first_call_ns: int
    median_ns: float
    mean_ns: float
    p90_ns: float
    min_ns: int
    max_ns: int


def scale_run(
    sizes,
    hp: HyperParams,
    rank_true: int = 3,
    seed: int = 0,
    repeats: int = 1,
    measure_memory: bool = False,
) -> list[ScalePoint]:
    """Train once per (n_users, n_observations) size and record wall-clock.

    ``sizes`` must be increasing in total work (n + observations).  With
    ``repeats`` > 1 the fastest run is kept, which filters scheduler
    noise.  Memory, when requested, is the allocation-tracker peak of a
    separate untimed run so the timing stays clean.
    """
    sizes = [(int(n), int(k)) for n, k in sizes]
    if not sizes:
        raise ValidationError("need at least one size")
    work = [n + k for n, k in sizes]
    if any(b < a for a, b in zip(work, work[1:])):
        raise ValidationError("sizes must be increasing")
    if repeats < 1:
        raise ValidationError("repeats must be >= 1")

    points = []
    for n, k in sizes:
        matrix, _ = make_planted_matrix(n, rank_true, n_obs=k, seed=seed)
        best = float("inf")
        for _ in range(repeats):
            start = time.perf_counter()
            train(matrix, hp)
            best = min(best, time.perf_counter() - start)
        peak = None
        if measure_memory:
            tracemalloc.start()
            try:
                train(matrix, hp)
                _, peak = tracemalloc.get_traced_memory()
            finally:
                tracemalloc.stop()
        points.append(ScalePoint(n, matrix.n_observations, best, peak))
    return points


def random_model(n: int, rank: int, seed: int = 0) -> FactorModel:
    """A structurally valid model with random parameters, for latency work
    where the numeric values are irrelevant."""
    rng = np.random.default_rng(seed)
    return FactorModel(
        n_users=n,
        rank=rank,
        trustor_factors=rng.normal(0.0, 0.3, (n, rank)),
        trustee_factors=rng.normal(0.0, 0.3, (n, rank)),
        coefficients=rng.normal(1.0, 0.1, 3),
        bias=BiasTerms(0.5, rng.normal(0.0, 0.1, n), rng.normal(0.0, 0.1, n)),
    )


def query_latency(
    model: FactorModel, trials: int, seed: int = 0, clamp: bool = False
) -> LatencyStats:
    """Per-call latency distribution of :func:`predict_pair` on random pairs.

    The first (cold) call is reported separately; the timed trials run
    after a short warmup.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    n = model.n_users

    def draw(count):
        us = rng.integers(0, n, count)
        vs = rng.integers(0, n - 1, count)
        vs = np.where(vs >= us, vs + 1, vs)
        return us.tolist(), vs.tolist()

    u0, v0 = draw(1)
    start = time.perf_counter_ns()
    predict_pair(model, u0[0], v0[0], clamp=clamp)
    first_call = time.perf_counter_ns() - start

    warm_u, warm_v = draw(min(200, trials))
    for u, v in zip(warm_u, warm_v):
        predict_pair(model, u, v, clamp=clamp)

    us, vs = draw(trials)
    samples = np.empty(trials, dtype=np.int64)
    for k in range(trials):
        t0 = time.perf_counter_ns()
        predict_pair(model, us[k], vs[k], clamp=clamp)
        samples[k] = time.perf_counter_ns() - t0

    return LatencyStats(
        trials=trials,
        first_call_ns=int(first_call),
        median_ns=float(np.median(samples)),
        mean_ns=float(samples.mean()),
        p90_ns=float(np.percentile(samples, 90)),
        min_ns=int(samples.min()),
        max_ns=int(samples.max()),
    )
