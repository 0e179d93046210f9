"""Censored-data log-likelihood, simplex MLE, observed information, Wald intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .dataio import Cause, DataError, Dataset
from .model import PARAM_NAMES, Params, tie_probability
from .quadrature import DEFAULT_QUAD, QuadratureError, QuadratureSpec


class SingularInformationError(RuntimeError):
    """Observed information matrix cannot be inverted."""


@dataclass(frozen=True)
class FitOptions:
    """Nelder-Mead settings: log-space simplex, dual tolerance on x and f."""

    x_tol: float = 1e-8
    f_tol: float = 1e-8
    max_iterations: int = 5000


@dataclass
class FitResult:
    theta_hat: Params
    loglik: float
    info_matrix: np.ndarray
    intervals: dict
    level: float
    converged: bool
    iterations: int
    notes: tuple = ()
    metadata: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "estimates": self.theta_hat.as_dict(),
            "loglik": self.loglik,
            "level": self.level,
            "intervals": {k: list(v) for k, v in self.intervals.items()},
            "info_matrix": [list(row) for row in self.info_matrix],
            "converged": self.converged,
            "iterations": self.iterations,
            "notes": list(self.notes),
            "metadata": self.metadata,
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "FitResult":
        return cls(
            theta_hat=Params.from_sequence(payload["estimates"][n] for n in PARAM_NAMES),
            loglik=float(payload["loglik"]),
            info_matrix=np.array(payload["info_matrix"], dtype=float),
            intervals={k: tuple(v) for k, v in payload["intervals"].items()},
            level=float(payload["level"]),
            converged=bool(payload["converged"]),
            iterations=int(payload["iterations"]),
            notes=tuple(payload.get("notes", ())),
            metadata=dict(payload.get("metadata", {})),
        )


def log_likelihood(theta: Params, data: Dataset, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Log-likelihood of a censored competing-risks dataset.

    Tied failures contribute through the tie probability, which costs one
    quadrature per parameter vector; datasets without ties need none.
    """
    a0, a1, a2, lam = theta.as_tuple()
    t = data.times
    with np.errstate(over="ignore", divide="ignore"):
        power_sum = float(np.sum(t**a0) + np.sum(t**a1) + np.sum(t**a2))
    m0, m1, m2 = data.m0, data.m1, data.m2

    ll = (
        m1 * math.log(a1)
        + m2 * math.log(a2)
        + (m0 + m1 + m2) * math.log(lam)
        - lam * power_sum
        + (a1 - 1.0) * data.sum_log_times_mode1
        + (a2 - 1.0) * data.sum_log_times_mode2
    )

    if m0 > 0:
        p_tie = tie_probability(theta, quad)
        if p_tie <= 0.0:
            return -math.inf
        tt = data.times_for(Cause.TIE)
        with np.errstate(over="ignore", divide="ignore"):
            rate = a0 * tt ** (a0 - 1.0) + a1 * tt ** (a1 - 1.0) + a2 * tt ** (a2 - 1.0)
            ll += m0 * math.log(p_tie) + float(np.sum(np.log(rate)))

    return ll if math.isfinite(ll) else -math.inf


def default_init(data: Dataset) -> Params:
    """Exponential-submodel moment start: unit shapes, lambda from the failure rate."""
    return Params(1.0, 1.0, 1.0, data.n_failures / (3.0 * float(data.times.sum())))


def _hessian_fd(f, x: np.ndarray, steps: np.ndarray) -> np.ndarray:
    """Central finite-difference Hessian with per-coordinate steps."""
    n = len(x)
    h = np.asarray(steps, dtype=float)
    hess = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        xp, xm = x.copy(), x.copy()
        xp[i] += h[i]
        xm[i] -= h[i]
        hess[i, i] = (f(xp) - 2.0 * f0 + f(xm)) / h[i] ** 2
    for i in range(n):
        for j in range(i + 1, n):
            xpp, xpm, xmp, xmm = x.copy(), x.copy(), x.copy(), x.copy()
            xpp[[i, j]] += [h[i], h[j]]
            xpm[i] += h[i]
            xpm[j] -= h[j]
            xmp[i] -= h[i]
            xmp[j] += h[j]
            xmm[[i, j]] -= [h[i], h[j]]
            hess[i, j] = hess[j, i] = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h[i] * h[j])
    return hess


def observed_information(
    theta_hat: Params, data: Dataset, quad: QuadratureSpec = DEFAULT_QUAD
) -> np.ndarray:
    """Negative Hessian of the log-likelihood at theta_hat, on the original scale."""
    x = np.array(theta_hat.as_tuple())
    steps = 1e-4 * np.maximum(1.0, x)

    def f(v):
        return log_likelihood(Params.from_sequence(v), data, quad)

    hess = _hessian_fd(f, x, steps)
    return -0.5 * (hess + hess.T)


def _wald_intervals_from_info(theta_hat: Params, info: np.ndarray, level: float) -> dict:
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    cond = np.linalg.cond(info)
    if not math.isfinite(cond) or cond > 1e14:
        raise SingularInformationError(
            f"information matrix is numerically singular (condition number {cond:.3g})"
        )
    cov = np.linalg.inv(info)
    variances = np.diag(cov)
    if np.any(variances <= 0.0):
        raise SingularInformationError(
            f"information matrix is not positive definite (condition number {cond:.3g})"
        )
    z = stats.norm.ppf(0.5 * (1.0 + level))
    estimates = np.array(theta_hat.as_tuple())
    half = z * np.sqrt(variances)
    # Parameters are positive, so lower endpoints are truncated at zero.
    return {
        name: (max(0.0, est - hw), est + hw)
        for name, est, hw in zip(PARAM_NAMES, estimates, half)
    }


def wald_intervals(fit: FitResult, level: float) -> dict:
    """Asymptotic-normal intervals at the given level from a fitted result."""
    return _wald_intervals_from_info(fit.theta_hat, fit.info_matrix, level)


def fit_mle(
    data: Dataset,
    init: Params | None = None,
    options: FitOptions = FitOptions(),
    quad: QuadratureSpec = DEFAULT_QUAD,
    level: float = 0.95,
) -> FitResult:
    """Maximize the log-likelihood with Nelder-Mead over log-parameters.

    Optimizing xi = log(theta) keeps the simplex inside the positive orthant
    without penalties; the information matrix and intervals are computed on
    the original scale at the optimum.
    """
    if data.n_failures == 0:
        raise DataError("cannot fit: every record is right censored")
    if init is None:
        init = default_init(data)

    def objective(xi):
        with np.errstate(over="ignore"):
            values = np.exp(xi)
        try:
            theta = Params.from_sequence(values)
            ll = log_likelihood(theta, data, quad)
        except (ValueError, QuadratureError):
            return math.inf
        return -ll if math.isfinite(ll) else math.inf

    result = optimize.minimize(
        objective,
        np.log(np.array(init.as_tuple())),
        method="Nelder-Mead",
        options={
            "xatol": options.x_tol,
            "fatol": options.f_tol,
            "maxiter": options.max_iterations,
        },
    )

    theta_hat = Params.from_sequence(np.exp(result.x))
    info = observed_information(theta_hat, data, quad)
    intervals = _wald_intervals_from_info(theta_hat, info, level)

    notes = []
    if data.m0 == 0:
        notes.append(
            "no tied failures observed: alpha0 is informed only through the "
            "survival term and may be weakly identified"
        )

    return FitResult(
        theta_hat=theta_hat,
        loglik=-float(result.fun),
        info_matrix=info,
        intervals=intervals,
        level=level,
        converged=bool(result.success),
        iterations=int(result.nit),
        notes=tuple(notes),
        metadata={
            "optimizer": "nelder-mead-log-space",
            "x_tol": options.x_tol,
            "f_tol": options.f_tol,
            "max_iterations": options.max_iterations,
            "init": init.as_dict(),
            "quad": {
                "rel_tol": quad.rel_tol,
                "abs_tol": quad.abs_tol,
                "max_subdivisions": quad.max_subdivisions,
            },
            "n_evaluations": int(result.nfev),
        },
    )
