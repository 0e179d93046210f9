"""Within-sample prediction of failures in a future interval (R, R + delta]."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .bayes import PosteriorSample
from .model import Params, min_survival
from .quadrature import DEFAULT_QUAD, QuadratureSpec, integrate_finite


class FailureMode(enum.Enum):
    """Which failures to count: any, a specific mode, or the tied (shared-shock) channel."""

    ANY = "any"
    MODE1 = "1"
    MODE2 = "2"
    TIE = "tie"


@dataclass(frozen=True)
class PredictionQuery:
    censor_time: float
    delta: float
    n_star: int
    mode: FailureMode = FailureMode.ANY
    level: float = 0.95

    def __post_init__(self):
        if self.censor_time <= 0.0:
            raise ValueError("censor_time must be positive")
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")
        if self.n_star < 0:
            raise ValueError("n_star must be nonnegative")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must be in (0, 1)")


@dataclass
class PredictionReport:
    rho_hat: float
    expected_failures: float
    bounds: tuple
    pmf: np.ndarray | None = None
    cdf: np.ndarray | None = None
    median: int | None = None
    method: str = "frequentist"

    def to_json_dict(self) -> dict:
        payload = {
            "method": self.method,
            "rho_hat": self.rho_hat,
            "expected_failures": self.expected_failures,
            "bounds": [int(self.bounds[0]), int(self.bounds[1])],
        }
        if self.median is not None:
            payload["median"] = int(self.median)
        if self.pmf is not None:
            payload["pmf"] = [float(p) for p in self.pmf]
            payload["cdf"] = [float(c) for c in self.cdf]
        return payload


def rho_any(theta: Params, censor_time: float, delta: float) -> float:
    """P(failure in (R, R+delta] | survived past R), either mode.

    Evaluated through the exponent difference, so deep-tail survival ratios
    never underflow.
    """
    if censor_time <= 0.0 or delta <= 0.0:
        raise ValueError("censor_time and delta must be positive")
    a0, a1, a2, lam = theta.as_tuple()
    r, s = censor_time, censor_time + delta
    gap = lam * ((s**a0 - r**a0) + (s**a1 - r**a1) + (s**a2 - r**a2))
    return -math.expm1(-gap)


def rho_mode(
    theta: Params,
    censor_time: float,
    delta: float,
    mode: FailureMode,
    quad: QuadratureSpec = DEFAULT_QUAD,
) -> float:
    """Conditional probability that the failure in (R, R+delta] comes from one channel.

    Mode 1 and Mode 2 use their own shape in the cause-specific rate; TIE uses
    the shared-shock shape, so the three channel probabilities add up to the
    any-mode probability. The survival normalization is folded into the
    exponent to stay finite far into the tail.
    """
    if mode is FailureMode.ANY:
        return rho_any(theta, censor_time, delta)
    a0, a1, a2, lam = theta.as_tuple()
    shape = {FailureMode.MODE1: a1, FailureMode.MODE2: a2, FailureMode.TIE: a0}[mode]
    r = censor_time
    base = lam * (r**a0 + r**a1 + r**a2)

    def integrand(x):
        return lam * shape * x ** (shape - 1.0) * math.exp(
            base - lam * (x**a0 + x**a1 + x**a2)
        )

    return integrate_finite(integrand, r, r + delta, quad)


def _binomial_quantile(p: float, n: int, rho: float) -> int:
    """Smallest m with Binomial(n, rho) CDF(m) >= p."""
    return int(stats.binom.ppf(p, n, rho))


def predict_frequentist(rho_hat: float, query: PredictionQuery) -> PredictionReport:
    """Plug-in binomial prediction: expected count and equal-tail quantile bounds."""
    if not 0.0 <= rho_hat <= 1.0:
        raise ValueError(f"rho_hat must be in [0, 1], got {rho_hat}")
    n = query.n_star
    gamma = 1.0 - query.level
    lower = _binomial_quantile(0.5 * gamma, n, rho_hat)
    upper = _binomial_quantile(1.0 - 0.5 * gamma, n, rho_hat)
    m = np.arange(n + 1)
    pmf = stats.binom.pmf(m, n, rho_hat)
    return PredictionReport(
        rho_hat=rho_hat,
        expected_failures=n * rho_hat,
        bounds=(lower, upper),
        pmf=pmf,
        cdf=np.cumsum(pmf),
        median=_binomial_quantile(0.5, n, rho_hat),
        method="frequentist",
    )


def posterior_rhos(
    posterior: PosteriorSample,
    query: PredictionQuery,
    quad: QuadratureSpec = DEFAULT_QUAD,
) -> np.ndarray:
    """Per-draw conditional failure probabilities for the queried mode."""
    if query.mode is FailureMode.ANY:
        draws = posterior.draws
        r, s = query.censor_time, query.censor_time + query.delta
        gaps = np.zeros(len(draws))
        for k in range(3):
            a = draws[:, k]
            gaps += s**a - r**a
        return -np.expm1(-draws[:, 3] * gaps)
    return np.array(
        [
            rho_mode(Params.from_sequence(row), query.censor_time, query.delta, query.mode, quad)
            for row in posterior.draws
        ]
    )


def predict_bayesian(
    posterior: PosteriorSample,
    query: PredictionQuery,
    quad: QuadratureSpec = DEFAULT_QUAD,
) -> PredictionReport:
    """Posterior-averaged binomial prediction.

    The predictive CDF at m is the Monte Carlo average of Binomial(n*, rho_k)
    CDFs over posterior draws; the point prediction is the predictive mean
    n* times the average rho, and bounds are equal-tail predictive quantiles.
    """
    rhos = posterior_rhos(posterior, query, quad)
    n = query.n_star
    m = np.arange(n + 1)
    cdf = stats.binom.cdf(m[:, None], n, rhos[None, :]).mean(axis=1)
    pmf = np.diff(cdf, prepend=0.0)
    gamma = 1.0 - query.level
    lower = min(n, int(np.searchsorted(cdf, 0.5 * gamma)))
    upper = min(n, int(np.searchsorted(cdf, 1.0 - 0.5 * gamma)))
    median = min(n, int(np.searchsorted(cdf, 0.5)))
    rho_bar = float(rhos.mean())
    return PredictionReport(
        rho_hat=rho_bar,
        expected_failures=n * rho_bar,
        bounds=(lower, upper),
        pmf=pmf,
        cdf=cdf,
        median=median,
        method="bayesian",
    )
