"""Sorted-L1 penalized estimation toolkit.

Fast proximal operator of the sorted-L1 norm, proximal-gradient and
accelerated solvers with duality-gap certificates, false-discovery-rate
calibrated regularization sequences, multiple-testing procedures,
asymptotic FDR/power predictions, and a reproducible simulation harness.
"""

__version__ = "0.1.0"

from .sorted_l1 import (
    dual_infeasibility,
    kkt_verify,
    prox_reference_averaging,
    prox_sorted_l1,
    prox_stack,
    sorted_l1_norm,
    validate_lambda,
)
from .solver import (
    SolverResult,
    duality_gap,
    fista_solve,
    objective,
    prox_gradient_solve,
    spectral_norm_sq,
)
from .lambda_seq import (
    CorrectedSequence,
    WeightSamplingConfig,
    WeightTable,
    estimate_weights,
    lambda_bh,
    lambda_bhc_gaussian,
    lambda_bhc_weighted,
    normal_quantile,
    weight_sampling_grid,
)
from .inference import (
    ExperimentMetrics,
    RejectionSet,
    debias,
    fdr_threshold_estimate,
    metrics,
    slope_test,
    step_down,
    step_up,
)
from .amp import (
    AmpFixedPoint,
    HighSnrPrediction,
    PriorSpec,
    alpha_min,
    high_snr_fdr,
    high_snr_sweep,
    soft_threshold_moments,
    state_evolution,
    tail_probability,
    weak_threshold,
)
from .harness import (
    DesignSpec,
    ExperimentConfig,
    ExperimentReport,
    MethodSpec,
    SignalSpec,
    bh_marginal,
    lasso_reference,
    make_design,
    make_signal,
    run_experiment,
    whitening_constants,
)
from .estimator import SlopeRegressor

__all__ = [
    "__version__",
    "AmpFixedPoint",
    "CorrectedSequence",
    "DesignSpec",
    "ExperimentConfig",
    "ExperimentMetrics",
    "ExperimentReport",
    "HighSnrPrediction",
    "MethodSpec",
    "PriorSpec",
    "RejectionSet",
    "SignalSpec",
    "SlopeRegressor",
    "SolverResult",
    "WeightSamplingConfig",
    "WeightTable",
    "alpha_min",
    "bh_marginal",
    "debias",
    "dual_infeasibility",
    "duality_gap",
    "estimate_weights",
    "fdr_threshold_estimate",
    "fista_solve",
    "high_snr_fdr",
    "high_snr_sweep",
    "kkt_verify",
    "lambda_bh",
    "lambda_bhc_gaussian",
    "lambda_bhc_weighted",
    "lasso_reference",
    "make_design",
    "make_signal",
    "metrics",
    "normal_quantile",
    "objective",
    "prox_gradient_solve",
    "prox_reference_averaging",
    "prox_sorted_l1",
    "prox_stack",
    "run_experiment",
    "slope_test",
    "soft_threshold_moments",
    "sorted_l1_norm",
    "spectral_norm_sq",
    "state_evolution",
    "step_down",
    "step_up",
    "tail_probability",
    "validate_lambda",
    "weak_threshold",
    "weight_sampling_grid",
    "whitening_constants",
]
