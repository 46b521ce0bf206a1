"""Split conformal prediction, tolerance regions and risk control.

The package calibrates a threshold lambda_hat on held-out nonconformity
scores so the resulting prediction set carries a distribution-free
finite-sample guarantee: marginal coverage (q_hat), an (eps, delta)
tolerance region (p_hat), or a bounded monotone risk (crc_lambda,
ucb_lambda, ltt_fixed_sequence).  Exact binomial and beta-binomial tail
machinery lives in ``dists``, the duality between the guarantees in
``calibration``, coverage-law experiments in ``experiments`` and the
runtime self-checks in ``verify``.
"""

from .calibration import (
    AlphaFromTolerance,
    CalibrationResult,
    DualAlpha,
    DualTolerance,
    Marginal,
    MarginalBounds,
    NonconformityScores,
    Tolerance,
    alpha_given_tolerance,
    calibrate,
    marginal_bounds,
    p_hat,
    q_hat,
    tolerance_delta_given_alpha,
    tolerance_eps_given_alpha,
    wilks_interval_law,
    wilks_is_tolerance,
)
from .dists import (
    BetaBinParams,
    BetaParams,
    SupKResult,
    beta_quantile,
    beta_reg,
    betabin_cdf,
    betabin_pmf,
    betabin_quantile,
    binom_cdf,
    binom_inf_p,
    binom_sup_k,
)
from .experiments import (
    DEFAULT_SEED,
    Dataset,
    ExperimentSummary,
    Histogram,
    ParseError,
    StandardizeStats,
    TheoreticalLaw,
    TrialReport,
    gen_synthetic,
    load_csv,
    reference_law,
    run_trials,
    save_csv,
    standardize,
    summarize,
    tolerance_tables,
)
from .nested import LambdaDomain, NestedFamily, Score, member, score_of
from .predictors import (
    DEFAULT_LEVEL_GRID,
    IntervalPredictor,
    KnnQuantileConfig,
    PredictionInterval,
    TuneReport,
    cqr_score,
    cqr_set,
    fit_knn_quantile,
    tune_nominal_quantiles,
)
from .risk import (
    LossCurve,
    PValueGrid,
    RiskEstimate,
    crc_lambda,
    empirical_risk,
    ltt_bonferroni,
    ltt_fixed_sequence,
    ltt_pvalues,
    ucb_exact_binomial,
    ucb_hoeffding,
    ucb_lambda,
)
from .verify import SUITE_NAMES, SuiteResult, run_suites

__version__ = "0.1.0"

__all__ = [
    "AlphaFromTolerance",
    "BetaBinParams",
    "BetaParams",
    "CalibrationResult",
    "DEFAULT_LEVEL_GRID",
    "DEFAULT_SEED",
    "Dataset",
    "DualAlpha",
    "DualTolerance",
    "ExperimentSummary",
    "Histogram",
    "IntervalPredictor",
    "KnnQuantileConfig",
    "LambdaDomain",
    "LossCurve",
    "Marginal",
    "MarginalBounds",
    "NestedFamily",
    "NonconformityScores",
    "PValueGrid",
    "ParseError",
    "PredictionInterval",
    "RiskEstimate",
    "SUITE_NAMES",
    "Score",
    "StandardizeStats",
    "SuiteResult",
    "SupKResult",
    "TheoreticalLaw",
    "Tolerance",
    "TrialReport",
    "TuneReport",
    "alpha_given_tolerance",
    "beta_quantile",
    "beta_reg",
    "betabin_cdf",
    "betabin_pmf",
    "betabin_quantile",
    "binom_cdf",
    "binom_inf_p",
    "binom_sup_k",
    "calibrate",
    "cqr_score",
    "cqr_set",
    "crc_lambda",
    "empirical_risk",
    "fit_knn_quantile",
    "gen_synthetic",
    "load_csv",
    "ltt_bonferroni",
    "ltt_fixed_sequence",
    "ltt_pvalues",
    "marginal_bounds",
    "member",
    "p_hat",
    "q_hat",
    "reference_law",
    "run_suites",
    "run_trials",
    "save_csv",
    "score_of",
    "standardize",
    "summarize",
    "tolerance_delta_given_alpha",
    "tolerance_eps_given_alpha",
    "tolerance_tables",
    "tune_nominal_quantiles",
    "ucb_exact_binomial",
    "ucb_hoeffding",
    "ucb_lambda",
    "wilks_interval_law",
    "wilks_is_tolerance",
]
