"""Stochastic search estimation for linear regression with log-concave errors."""

from .limits import (
    ConditionReport,
    LimitLawSpec,
    alpha_q,
    beta_q,
    corollary_limit_sample,
    d_condition_stats,
    lemma6_bound,
    scaled_min_statistic,
    weibull_cdf,
    weibull_sample,
)
from .logconcave import (
    LogConcaveFit,
    MLEDoesNotExist,
    evaluate_fit,
    fit_logconcave,
    profile_loglik,
    recenter_to_mean_zero,
)
from .model import Estimate, RegressionProblem, gram_matrix, load_problem, ols_fit, residuals, wls_fit
from .search import (
    CandidateSet,
    SearchResult,
    build_candidates,
    choose_c,
    min_distance_to,
    stochastic_search_fit,
)
from .weights import (
    WeightVector,
    multinomial_weights,
    subsample_size_for_c,
    subsample_weights,
    w2_statistic,
    w3_statistic,
)

__version__ = "0.1.0"
