"""Gamma-Dirichlet x gamma prior, folded-normal Metropolis-Hastings, diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .dataio import Dataset
from .likelihood import log_likelihood
from .model import PARAM_NAMES, Params
from .quadrature import DEFAULT_QUAD, QuadratureError, QuadratureSpec
from .sampling import SeededRng

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Hyperparams:
    """Gamma-Dirichlet hyperparameters for the shapes, gamma (rate c1, shape c2) for lambda."""

    a: float
    b: float
    a0: float
    a1: float
    a2: float
    c1: float
    c2: float

    def __post_init__(self):
        for name in ("a", "b", "a0", "a1", "a2", "c1", "c2"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"hyperparameter {name} must be positive")

    @property
    def a_bar(self) -> float:
        return self.a0 + self.a1 + self.a2


#: Diffuse default used throughout: near-flat gamma pieces, mild Dirichlet shapes.
DIFFUSE_HYPERPARAMS = Hyperparams(a=0.005, b=0.005, a0=1.2, a1=1.2, a2=1.2, c1=0.005, c2=0.005)


@dataclass(frozen=True)
class ProposalSpec:
    """Per-coordinate standard deviations of the folded-normal proposal."""

    sigma: tuple = (math.sqrt(0.5),) * 4

    def __post_init__(self):
        if len(self.sigma) != 4 or any(s <= 0.0 for s in self.sigma):
            raise ValueError("proposal needs 4 positive standard deviations")


DEFAULT_PROPOSAL = ProposalSpec()


@dataclass
class PosteriorSample:
    """Post-burn-in chain: draws (n, 4), per-iteration accept flags, bookkeeping."""

    draws: np.ndarray
    burn_in: int
    acceptance_rate: float
    seed: int
    accepted: np.ndarray

    def __post_init__(self):
        self.draws = np.asarray(self.draws, dtype=float)
        if self.draws.ndim != 2 or self.draws.shape[1] != 4 or len(self.draws) == 0:
            raise ValueError("draws must be a non-empty (n, 4) array")
        if not 0.0 <= self.acceptance_rate <= 1.0:
            raise ValueError("acceptance_rate must lie in [0, 1]")

    def __len__(self):
        return len(self.draws)

    def column(self, name: str) -> np.ndarray:
        return self.draws[:, PARAM_NAMES.index(name)]


def _log_prior_values(values: np.ndarray, hyper: Hyperparams) -> float:
    a0v, a1v, a2v, lam = values
    if a0v <= 0.0 or a1v <= 0.0 or a2v <= 0.0 or lam <= 0.0:
        return -math.inf
    h = hyper
    alpha = a0v + a1v + a2v
    lam_part = h.c2 * math.log(h.c1) - gammaln(h.c2) - h.c1 * lam + (h.c2 - 1.0) * math.log(lam)
    gd_part = (
        gammaln(h.a_bar)
        - gammaln(h.a)
        + (h.a - h.a_bar) * (math.log(h.b) + math.log(alpha))
        + sum(
            ai * math.log(h.b) - gammaln(ai) + (ai - 1.0) * math.log(av) - h.b * av
            for ai, av in ((h.a0, a0v), (h.a1, a1v), (h.a2, a2v))
        )
    )
    return lam_part + gd_part


def log_prior(theta: Params, hyper: Hyperparams) -> float:
    """Log joint prior density, normalizing constants included.

    The shapes carry a Gamma-Dirichlet density whose coupling factor
    (b * (alpha0+alpha1+alpha2))^(a - a_bar) vanishes when a equals a_bar,
    leaving three independent gamma priors.
    """
    return _log_prior_values(np.array(theta.as_tuple()), hyper)


def log_posterior(
    theta: Params,
    data: Dataset,
    hyper: Hyperparams,
    quad: QuadratureSpec = DEFAULT_QUAD,
) -> float:
    """Unnormalized log posterior: log-likelihood plus log prior."""
    return log_likelihood(theta, data, quad) + log_prior(theta, hyper)


def folded_normal_log_density(x, mu, sigma: ProposalSpec) -> float:
    """Log density of the diagonal multivariate folded normal at x, centered at mu."""
    xs = np.array(x.as_tuple() if isinstance(x, Params) else x, dtype=float)
    mus = np.array(mu.as_tuple() if isinstance(mu, Params) else mu, dtype=float)
    if np.any(xs < 0.0):
        raise ValueError("folded normal support is the nonnegative orthant")
    sig = np.asarray(sigma.sigma, dtype=float)
    lower = -0.5 * ((xs - mus) / sig) ** 2
    upper = -0.5 * ((xs + mus) / sig) ** 2
    return float(np.sum(np.logaddexp(lower, upper) - np.log(sig) - _LOG_SQRT_2PI))


class ChainAborted(QuadratureError):
    """Quadrature failed mid-chain; carries the state for post-mortem."""

    def __init__(self, iteration: int, state: np.ndarray, cause: Exception):
        self.iteration = iteration
        self.state = tuple(float(v) for v in state)
        super().__init__(
            f"chain aborted at iteration {iteration} with state {self.state}: {cause}"
        )


def _run_chain(log_target, init: Params, chain_length: int, burn_in: int,
               proposal: ProposalSpec, rng: SeededRng) -> PosteriorSample:
    if not chain_length > burn_in >= 0:
        raise ValueError("need chain_length > burn_in >= 0")
    sigma = np.asarray(proposal.sigma, dtype=float)
    gen = rng.generator

    current = np.array(init.as_tuple())
    lp = log_target(current)
    if not math.isfinite(lp):
        raise ValueError("initial state has zero target density")

    draws = np.empty((chain_length, 4))
    accepted_flags = np.zeros(chain_length, dtype=bool)
    draws[0] = current
    accepted = 0

    for l in range(1, chain_length):
        proposed = np.abs(gen.normal(current, sigma))
        try:
            lp_new = log_target(proposed)
        except QuadratureError as exc:
            raise ChainAborted(l, proposed, exc) from exc
        log_u = math.log(gen.random())
        if log_u < lp_new - lp:
            current = proposed
            lp = lp_new
            accepted += 1
            accepted_flags[l] = True
        draws[l] = current

    return PosteriorSample(
        draws=draws[burn_in:],
        burn_in=burn_in,
        acceptance_rate=accepted / (chain_length - 1),
        seed=rng.seed,
        accepted=accepted_flags[burn_in:],
    )


def mh_sample(
    data: Dataset | None,
    hyper: Hyperparams,
    init: Params,
    chain_length: int,
    burn_in: int,
    proposal: ProposalSpec = DEFAULT_PROPOSAL,
    rng: SeededRng = None,
    quad: QuadratureSpec = DEFAULT_QUAD,
) -> PosteriorSample:
    """Metropolis-Hastings with a folded-normal random walk proposal.

    Each coordinate of the proposal is |Normal(current_i, sigma_i^2)|; the
    folded density is symmetric in (point, center), so the acceptance ratio
    reduces to the posterior ratio. Passing ``data=None`` targets the prior
    alone, which is the sampler's analytic test mode.
    """
    if rng is None:
        raise ValueError("mh_sample requires an explicit SeededRng")
    if data is None:
        log_target = lambda v: _log_prior_values(v, hyper)
    else:
        def log_target(v):
            lp = _log_prior_values(v, hyper)
            if not math.isfinite(lp):
                return -math.inf
            return lp + log_likelihood(Params.from_sequence(v), data, quad)

    return _run_chain(log_target, init, chain_length, burn_in, proposal, rng)


@dataclass(frozen=True)
class PosteriorSummary:
    means: dict
    variances: dict
    intervals: dict
    level: float


def posterior_summary(sample: PosteriorSample, level: float = 0.95) -> PosteriorSummary:
    """Chain means, population variances, and equal-tail credible intervals.

    The interval endpoints are order statistics at the floor indices
    [gamma/2 * n] and [(1 - gamma/2) * n], clamped into [1, n].
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    gamma = 1.0 - level
    n = len(sample)
    lo_idx = min(n, max(1, math.floor(0.5 * gamma * n)))
    hi_idx = min(n, max(1, math.floor((1.0 - 0.5 * gamma) * n)))

    means, variances, intervals = {}, {}, {}
    for k, name in enumerate(PARAM_NAMES):
        col = sample.draws[:, k]
        means[name] = float(col.mean())
        variances[name] = float(col.var())
        ordered = np.sort(col)
        intervals[name] = (float(ordered[lo_idx - 1]), float(ordered[hi_idx - 1]))
    return PosteriorSummary(means=means, variances=variances, intervals=intervals, level=level)


def gelman_rubin(chains) -> dict:
    """Potential scale reduction factor per parameter across >= 2 chains."""
    chains = list(chains)
    if len(chains) < 2:
        raise ValueError("gelman_rubin needs at least two chains")
    lengths = {len(c) for c in chains}
    if len(lengths) != 1:
        raise ValueError(f"chains must have equal post-burn-in lengths, got {sorted(lengths)}")
    n = lengths.pop()
    if n < 10:
        raise ValueError("chains too short for a meaningful diagnostic")

    stacked = np.stack([c.draws for c in chains])  # (m, n, 4)
    within = stacked.var(axis=1, ddof=1).mean(axis=0)
    between_over_n = stacked.mean(axis=1).var(axis=0, ddof=1)
    var_plus = (n - 1) / n * within + between_over_n
    rhat = np.sqrt(var_plus / within)
    return dict(zip(PARAM_NAMES, (float(r) for r in rhat)))


def autocorrelation(sample: PosteriorSample, max_lag: int) -> np.ndarray:
    """Sample autocorrelation per coordinate, shape (max_lag + 1, 4); lag 0 is 1."""
    n = len(sample)
    if not 0 <= max_lag < n:
        raise ValueError(f"max_lag must be in [0, {n - 1}], got {max_lag}")
    centered = sample.draws - sample.draws.mean(axis=0)
    denom = np.sum(centered**2, axis=0)
    acf = np.empty((max_lag + 1, 4))
    acf[0] = 1.0
    for k in range(1, max_lag + 1):
        acf[k] = np.sum(centered[:-k] * centered[k:], axis=0) / denom
    return acf
