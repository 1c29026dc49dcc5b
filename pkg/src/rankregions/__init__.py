"""Exact, distribution-free confidence regions for the regression function
of binary classification, built by resampling rank tests.

For any candidate regression function the library regenerates alternative
label sets from the candidate's conditional law, compares them to the
original sample through a point-estimator-based reference variable, and
accepts the candidate when the original sample's rank falls inside a chosen
window. At the true regression function that rank is exactly uniform, so the
regions hit any rational confidence level at every finite sample size.

Ranking engines: k-nearest neighbors, least-squares perceptron, logistic
maximum likelihood, and closed-form linear least squares; an asymptotic MLE
ellipsoid is included as the baseline the resampling regions are compared
against.
"""

from .backend import backend_name
from .core import (
    DimensionMismatchError,
    InvalidLevelError,
    LabeledSample,
    RegressionModel,
    RngStream,
    StemRandomness,
    constant_model,
    evaluate_model,
    evaluate_model_batch,
    linear_model,
    logistic_model,
    make_streams,
)
from .ellipsoid import (
    EllipsoidRegion,
    SeparationError,
    build_ellipsoid,
    chi2_quantile,
    ellipsoid_contains,
)
from .estimators import (
    FitError,
    KNNEngine,
    LinearERMEngine,
    LogisticMLEEngine,
    NewtonSettings,
    PerceptronEngine,
    PerceptronSettings,
    RankDeficientError,
    default_k,
    engine_reference_vector,
    knn_predict,
    linear_erm_fit,
    logistic_mle_fit,
    perceptron_fit,
)
from .experiments import (
    CoverageReport,
    GridSpec,
    RankMap,
    ScenarioConfig,
    coverage_mc,
    gen_gaussian_mixture,
    gen_uniform_input,
    make_engine,
    rank_frequencies,
    rank_map,
    shrinkage_curve,
)
from .resample import (
    AlternativeOutputs,
    RankResult,
    generate_alternatives,
    init_stem,
    position_ranks,
    rank_statistic,
    test_candidate,
)

__version__ = "0.1.0"
