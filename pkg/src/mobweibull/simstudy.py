"""Monte Carlo harness: repeated simulate-and-fit over a (n, censoring) grid."""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bayes import (
    DEFAULT_PROPOSAL,
    Hyperparams,
    ProposalSpec,
    mh_sample,
    posterior_summary,
)
from .likelihood import FitOptions, SingularInformationError, fit_mle
from .model import PARAM_NAMES, Params
from .quadrature import QuadratureError
from .sampling import CensorSpec, SeededRng, generate_dataset

THREADS_ENV_VAR = "MOBWEIBULL_THREADS"


@dataclass(frozen=True)
class BayesSettings:
    hyper: Hyperparams
    chain_length: int = 5500
    burn_in: int = 500
    proposal: ProposalSpec = DEFAULT_PROPOSAL


@dataclass(frozen=True)
class StudyConfig:
    true_theta: Params
    sample_sizes: tuple
    censor_rates: tuple
    replications: int
    level: float = 0.95
    master_seed: int = 0
    bayes: BayesSettings | None = None

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if any(not 0.0 <= r < 1.0 for r in self.censor_rates):
            raise ValueError("censor rates must lie in [0, 1)")


@dataclass(frozen=True)
class StudyRow:
    n: int
    censor_rate: float
    parameter: str
    method: str
    relative_mse: float
    relative_bias: float
    avg_length: float
    coverage: float


@dataclass
class StudyResult:
    rows: list
    exclusions: dict
    wall_time: float
    config: StudyConfig = None

    def rows_for(self, n: int, censor_rate: float, parameter: str, method: str) -> StudyRow:
        for row in self.rows:
            if (
                row.n == n
                and row.censor_rate == censor_rate
                and row.parameter == parameter
                and row.method == method
            ):
                return row
        raise KeyError((n, censor_rate, parameter, method))


def _worker_count() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _run_replicate(args):
    """One replication: simulate, fit, optionally run a chain. Top level for pickling."""
    config, n, rate, cell_index, replicate = args
    rng = SeededRng(config.master_seed, key=(cell_index, replicate))
    censor = CensorSpec.target_rate(rate) if rate > 0.0 else CensorSpec.none()
    data = generate_dataset(config.true_theta, n, censor, rng.child(0))

    out = {"converged": False, "estimates": None, "intervals": None, "bayes": None}
    try:
        fit = fit_mle(data, level=config.level, options=FitOptions())
    except (QuadratureError, SingularInformationError, ValueError):
        return out
    if not fit.converged:
        return out
    out["converged"] = True
    out["estimates"] = [fit.theta_hat.as_dict()[p] for p in PARAM_NAMES]
    out["intervals"] = [fit.intervals[p] for p in PARAM_NAMES]

    if config.bayes is not None:
        settings = config.bayes
        try:
            sample = mh_sample(
                data,
                settings.hyper,
                fit.theta_hat,
                settings.chain_length,
                settings.burn_in,
                settings.proposal,
                rng.child(1),
            )
        except (QuadratureError, ValueError):
            out["converged"] = False
            out["estimates"] = None
            out["intervals"] = None
            return out
        summary = posterior_summary(sample, config.level)
        out["bayes"] = {
            "estimates": [summary.means[p] for p in PARAM_NAMES],
            "intervals": [summary.intervals[p] for p in PARAM_NAMES],
        }
    return out


def _aggregate(method: str, n: int, rate: float, estimates, intervals, truth) -> list:
    est = np.asarray(estimates)
    ints = np.asarray(intervals)
    rows = []
    for k, name in enumerate(PARAM_NAMES):
        true_val = truth[k]
        errors = est[:, k] - true_val
        lower, upper = ints[:, k, 0], ints[:, k, 1]
        rows.append(
            StudyRow(
                n=n,
                censor_rate=rate,
                parameter=name,
                method=method,
                relative_mse=float(np.mean(errors**2) / true_val**2),
                relative_bias=float(np.mean(errors) / true_val),
                avg_length=float(np.mean(upper - lower)),
                coverage=float(np.mean((lower <= true_val) & (true_val <= upper))),
            )
        )
    return rows


def run_study(config: StudyConfig) -> StudyResult:
    """Run the full grid; replications are seeded per (cell, replicate) so the
    result is identical no matter how many workers execute them."""
    start = time.monotonic()
    truth = [config.true_theta.as_dict()[p] for p in PARAM_NAMES]
    rows = []
    exclusions = {}
    workers = _worker_count()

    cells = [
        (n, rate, cell_index)
        for cell_index, (n, rate) in enumerate(
            (n, rate) for n in config.sample_sizes for rate in config.censor_rates
        )
    ]
    for n, rate, cell_index in cells:
        tasks = [(config, n, rate, cell_index, r) for r in range(config.replications)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_run_replicate, tasks, chunksize=8))
        else:
            results = [_run_replicate(task) for task in tasks]

        kept = [res for res in results if res["converged"]]
        exclusions[(n, rate)] = len(results) - len(kept)
        if not kept:
            continue
        rows.extend(
            _aggregate(
                "frequentist",
                n,
                rate,
                [res["estimates"] for res in kept],
                [res["intervals"] for res in kept],
                truth,
            )
        )
        if config.bayes is not None:
            rows.extend(
                _aggregate(
                    "bayesian",
                    n,
                    rate,
                    [res["bayes"]["estimates"] for res in kept],
                    [res["bayes"]["intervals"] for res in kept],
                    truth,
                )
            )

    return StudyResult(
        rows=rows,
        exclusions=exclusions,
        wall_time=time.monotonic() - start,
        config=config,
    )
