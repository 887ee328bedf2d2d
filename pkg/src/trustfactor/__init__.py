"""Trust inference for partially observed trust networks.

Fills in unseen pairwise trustworthiness scores by jointly learning
latent trustor/trustee factors and weighted bias terms from the observed
ratings, then answers pair queries in constant time.  Ships with an
edge-list ingester, a versioned model container, a holdout evaluation
harness, and scalability benchmarks; the ``trustfactor`` CLI fronts all
of it.
"""

from .bench import LatencyStats, ScalePoint, query_latency, random_model, scale_run
from .bias import compute_bias
from .core import (
    BiasTerms,
    FactorModel,
    HyperParams,
    ResidualMatrix,
    SparseTrustMatrix,
    TrustObservation,
    observed_pairs,
)
from .errors import (
    ChecksumError,
    ModelIOError,
    ParseError,
    SingularSystemError,
    SolverError,
    TruncatedStreamError,
    TrustFactorError,
    ValidationError,
    VersionMismatchError,
)
from .evaluate import (
    ABLATION_MODES,
    EvalReport,
    HoldoutSplit,
    dataset_digest,
    evaluate_split,
    make_split,
    run_ablation,
    score,
    sweep,
)
from .ingest import (
    DEFAULT_LEVELS,
    LevelMap,
    load_model,
    parse_edge_list,
    save_model,
    write_edge_list,
)
from .predict import objective_scores, predict_batch, predict_pair
from .solver import (
    RegressionSystem,
    TrainTrace,
    build_regression_system,
    coefficient_residuals,
    latent_residuals,
    objective_value,
    row_ridge_update,
    train,
    update_coefficients,
    update_matrices,
)
from .synthetic import PlantedTruth, make_planted_matrix

__version__ = "0.1.0"

__all__ = [
    "ABLATION_MODES",
    "BiasTerms",
    "ChecksumError",
    "DEFAULT_LEVELS",
    "EvalReport",
    "FactorModel",
    "HoldoutSplit",
    "HyperParams",
    "LatencyStats",
    "LevelMap",
    "ModelIOError",
    "ParseError",
    "PlantedTruth",
    "RegressionSystem",
    "ResidualMatrix",
    "ScalePoint",
    "SingularSystemError",
    "SolverError",
    "SparseTrustMatrix",
    "TrainTrace",
    "TruncatedStreamError",
    "TrustFactorError",
    "TrustObservation",
    "ValidationError",
    "VersionMismatchError",
    "build_regression_system",
    "coefficient_residuals",
    "compute_bias",
    "dataset_digest",
    "evaluate_split",
    "latent_residuals",
    "load_model",
    "make_planted_matrix",
    "make_split",
    "objective_scores",
    "objective_value",
    "observed_pairs",
    "parse_edge_list",
    "predict_batch",
    "predict_pair",
    "query_latency",
    "random_model",
    "row_ridge_update",
    "run_ablation",
    "save_model",
    "scale_run",
    "score",
    "sweep",
    "train",
    "update_coefficients",
    "update_matrices",
    "write_edge_list",
]
