"""Marshall-Olkin bivariate Weibull model with distinct shape parameters.

Tools for censored reliability data with two dependent failure modes:
exact distribution evaluation, simulation, likelihood and Bayesian fitting,
future-failure prediction, and a Monte Carlo study harness.
"""

__version__ = "0.1.0"

from .bayes import (
    DIFFUSE_HYPERPARAMS,
    Hyperparams,
    PosteriorSample,
    ProposalSpec,
    autocorrelation,
    folded_normal_log_density,
    gelman_rubin,
    log_posterior,
    log_prior,
    mh_sample,
    posterior_summary,
)
from .dataio import Cause, DataError, Dataset, Record, StepFunction, kaplan_meier, parse_csv, serialize
from .likelihood import (
    FitOptions,
    FitResult,
    SingularInformationError,
    fit_mle,
    log_likelihood,
    observed_information,
    wald_intervals,
)
from .model import PARAM_NAMES, Params, density, min_survival, mttf, survival, tie_probability
from .predict import (
    FailureMode,
    PredictionQuery,
    PredictionReport,
    predict_bayesian,
    predict_frequentist,
    rho_any,
    rho_mode,
)
from .quadrature import (
    DEFAULT_QUAD,
    QuadratureError,
    QuadratureSpec,
    integrate_finite,
    integrate_semi_infinite,
)
from .sampling import CensorSpec, SeededRng, censor_time_for_rate, generate_dataset, sample_pair, sample_pairs
from .simstudy import BayesSettings, StudyConfig, StudyResult, StudyRow, run_study
