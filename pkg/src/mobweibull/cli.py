"""Command-line front end: fit, bayes, predict, simulate, sample, km, mttf, density-grid.

Every command writes its outputs plus a single ``manifest.json`` into the
requested output directory. All numeric output is printed with 12
significant digits so re-running a command with the same inputs, flags and
seed reproduces byte-identical files (manifest timestamps aside).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bayes import (
    DEFAULT_PROPOSAL,
    DIFFUSE_HYPERPARAMS,
    Hyperparams,
    PosteriorSample,
    ProposalSpec,
    gelman_rubin,
    mh_sample,
    posterior_summary,
)
from .dataio import DataError, kaplan_meier, parse_csv, serialize
from .likelihood import FitResult, SingularInformationError, default_init, fit_mle
from .model import PARAM_NAMES, Params, density, min_survival, mttf
from .predict import (
    FailureMode,
    PredictionQuery,
    predict_bayesian,
    predict_frequentist,
    rho_mode,
)
from .quadrature import QuadratureError
from .sampling import CensorSpec, SeededRng, generate_dataset
from .simstudy import BayesSettings, StudyConfig, run_study

#: Multiplicative start dispersal for the diagnostic chains (chain 0 keeps the init).
DISPERSION_FACTORS = (1.0, 0.5, 2.0, 4.0)

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _fmt(x) -> str:
    return format(float(x), ".12g")


def _round12(obj):
    """Recursively coerce floats to 12 significant digits for stable JSON."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return float(_fmt(obj)) if math.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    if isinstance(obj, np.floating):
        return _round12(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(_round12(payload), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(cell if isinstance(cell, str) else _fmt(cell) for cell in row))
    path.write_text("\n".join(lines) + "\n")


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(outdir: Path, command: str, config: dict, seeds=None, input_path: Path = None):
    manifest = {
        "command": command,
        "config": config,
        "seeds": seeds,
        "version": __version__,
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    if input_path is not None:
        manifest["input"] = {"path": str(input_path), "sha256": _digest(input_path)}
    _write_json(outdir / "manifest.json", manifest)


def _parse_theta(text: str) -> Params:
    parts = [p for p in text.split(",") if p.strip()]
    try:
        return Params.from_sequence(parts)
    except ValueError as exc:
        raise DataError(f"bad --theta value {text!r}: {exc}") from exc


def _load_dataset(path: Path):
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    return parse_csv(path.read_text())


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fit_payload(fit: FitResult) -> dict:
    return fit.to_json_dict()


def _load_fit(path: Path) -> FitResult:
    return FitResult.from_json_dict(json.loads(path.read_text()))


def _load_chain(path: Path) -> PosteriorSample:
    text = path.read_text().splitlines()
    header = text[0].split(",")
    expected = ["iter", "alpha0", "alpha1", "alpha2", "lambda", "accepted"]
    if header != expected:
        raise DataError(f"{path}: expected chain header {','.join(expected)}")
    rows = [line.split(",") for line in text[1:] if line.strip()]
    if not rows:
        raise DataError(f"{path}: chain file has no draws")
    draws = np.array([[float(v) for v in row[1:5]] for row in rows])
    accepted = np.array([row[5] == "1" for row in rows])
    return PosteriorSample(
        draws=draws,
        burn_in=0,
        acceptance_rate=float(accepted.mean()),
        seed=0,
        accepted=accepted,
    )


def _chain_rows(sample: PosteriorSample, first_iter: int):
    for offset, (row, acc) in enumerate(zip(sample.draws, sample.accepted)):
        yield (str(first_iter + offset), _fmt(row[0]), _fmt(row[1]), _fmt(row[2]), _fmt(row[3]),
               "1" if acc else "0")


def cmd_fit(args) -> int:
    out = _outdir(args)
    data_path = Path(args.data)
    data = _load_dataset(data_path)
    init = _parse_theta(args.init) if args.init else None
    fit = fit_mle(data, init=init, level=args.level)
    _write_json(out / "fit.json", _fit_payload(fit))
    _write_manifest(
        out,
        "fit",
        {"data": str(data_path), "level": args.level, "init": init.as_dict() if init else None},
        input_path=data_path,
    )
    return 0


def cmd_bayes(args) -> int:
    out = _outdir(args)
    data_path = Path(args.data)
    data = _load_dataset(data_path)
    hyper = (
        Hyperparams(*[float(v) for v in args.hyper.split(",")]) if args.hyper else DIFFUSE_HYPERPARAMS
    )
    init = _parse_theta(args.init) if args.init else default_init(data)
    proposal = (
        ProposalSpec(tuple(float(v) for v in args.proposal_sigma.split(",")))
        if args.proposal_sigma
        else DEFAULT_PROPOSAL
    )
    rng = SeededRng(args.seed)

    chains = []
    for k in range(args.chains):
        factor = DISPERSION_FACTORS[k % len(DISPERSION_FACTORS)]
        start = Params.from_sequence([v * factor for v in init.as_tuple()])
        chains.append(
            mh_sample(data, hyper, start, args.length, args.burn_in, proposal, rng.child(k))
        )

    main_chain = chains[0]
    _write_csv(
        out / "chain.csv",
        ["iter", "alpha0", "alpha1", "alpha2", "lambda", "accepted"],
        _chain_rows(main_chain, args.burn_in + 1),
    )
    summary = posterior_summary(main_chain, args.level)
    payload = {
        "estimates": summary.means,
        "variances": summary.variances,
        "level": args.level,
        "credible_intervals": {k: list(v) for k, v in summary.intervals.items()},
        "acceptance_rate": main_chain.acceptance_rate,
        "gelman_rubin": gelman_rubin(chains) if len(chains) >= 2 else None,
        "chains": args.chains,
        "chain_length": args.length,
        "burn_in": args.burn_in,
        "metadata": {
            "seed": args.seed,
            "rng": SeededRng.algorithm,
            "hyperparams": vars(hyper) | {"a_bar": hyper.a_bar},
            "proposal_sigma": list(proposal.sigma),
            "init": init.as_dict(),
            "dispersion_factors": list(DISPERSION_FACTORS[: args.chains]),
        },
    }
    _write_json(out / "summary.json", payload)
    _write_manifest(
        out,
        "bayes",
        {
            "data": str(data_path),
            "chains": args.chains,
            "length": args.length,
            "burn_in": args.burn_in,
            "level": args.level,
        },
        seeds={"master": args.seed},
        input_path=data_path,
    )
    return 0


def cmd_predict(args) -> int:
    out = _outdir(args)
    source = Path(args.source)
    query = PredictionQuery(
        censor_time=args.R,
        delta=args.delta,
        n_star=args.nstar,
        mode=FailureMode(args.mode),
        level=args.level,
    )
    if source.suffix == ".json":
        fit = _load_fit(source)
        rho = rho_mode(fit.theta_hat, query.censor_time, query.delta, query.mode)
        report = predict_frequentist(rho, query)
    else:
        sample = _load_chain(source)
        report = predict_bayesian(sample, query)

    payload = report.to_json_dict()
    payload["query"] = {
        "R": query.censor_time,
        "delta": query.delta,
        "n_star": query.n_star,
        "mode": query.mode.value,
        "level": query.level,
    }
    _write_json(out / "predict.json", payload)
    _write_csv(
        out / "pmf.csv",
        ["m", "pmf", "cdf"],
        [(str(m), _fmt(p), _fmt(c)) for m, (p, c) in enumerate(zip(report.pmf, report.cdf))],
    )
    _write_manifest(out, "predict", payload["query"], input_path=source)
    return 0


def cmd_simulate(args) -> int:
    out = _outdir(args)
    config_path = Path(args.config)
    if not config_path.exists():
        raise DataError(f"config file not found: {config_path}")
    raw = json.loads(config_path.read_text())
    bayes = None
    if raw.get("bayes"):
        b = raw["bayes"]
        bayes = BayesSettings(
            hyper=Hyperparams(**b.get("hyperparams", vars(DIFFUSE_HYPERPARAMS))),
            chain_length=int(b.get("chain_length", 5500)),
            burn_in=int(b.get("burn_in", 500)),
        )
    config = StudyConfig(
        true_theta=Params.from_sequence(raw["true_theta"]),
        sample_sizes=tuple(int(n) for n in raw["sample_sizes"]),
        censor_rates=tuple(float(r) for r in raw["censor_rates"]),
        replications=int(raw["replications"]),
        level=float(raw.get("level", 0.95)),
        master_seed=int(raw.get("master_seed", 0)),
        bayes=bayes,
    )
    result = run_study(config)
    _write_csv(
        out / "table.csv",
        ["n", "censor_rate", "parameter", "method", "relative_mse", "relative_bias",
         "avg_length", "coverage"],
        [
            (str(r.n), _fmt(r.censor_rate), r.parameter, r.method, _fmt(r.relative_mse),
             _fmt(r.relative_bias), _fmt(r.avg_length), _fmt(r.coverage))
            for r in result.rows
        ],
    )
    _write_manifest(
        out,
        "simulate",
        raw,
        seeds={"master": config.master_seed},
        input_path=config_path,
    )
    extras = {
        "exclusions": {f"n={n},rate={rate}": count for (n, rate), count in result.exclusions.items()},
        "wall_time_seconds": result.wall_time,
    }
    _write_json(out / "exclusions.json", extras)
    return 0


def cmd_sample(args) -> int:
    out = _outdir(args)
    theta = _parse_theta(args.theta)
    censor = CensorSpec.target_rate(args.censor_rate) if args.censor_rate > 0 else CensorSpec.none()
    data = generate_dataset(theta, args.n, censor, SeededRng(args.seed))
    (out / "data.csv").write_text(serialize(data))
    _write_manifest(
        out,
        "sample",
        {"theta": theta.as_dict(), "n": args.n, "censor_rate": args.censor_rate},
        seeds={"master": args.seed, "rng": SeededRng.algorithm},
    )
    return 0


def cmd_km(args) -> int:
    out = _outdir(args)
    data_path = Path(args.data)
    data = _load_dataset(data_path)
    km = kaplan_meier(data)
    _write_csv(
        out / "km.csv",
        ["t", "survival"],
        [(_fmt(t), _fmt(s)) for t, s in zip(km.jump_times, km.values)],
    )
    if args.overlay:
        overlay_source = Path(args.overlay)
        theta = _theta_from_result_file(overlay_source)
        tmax = float(data.times.max())
        grid = np.linspace(0.0, tmax, args.grid_points)
        _write_csv(
            out / "overlay.csv",
            ["t", "km", "model"],
            [(_fmt(t), _fmt(km(t)), _fmt(min_survival(float(t), theta))) for t in grid],
        )
    _write_manifest(
        out,
        "km",
        {"data": str(data_path), "overlay": args.overlay, "grid_points": args.grid_points},
        input_path=data_path,
    )
    return 0


def _theta_from_result_file(path: Path) -> Params:
    if path.suffix == ".json":
        payload = json.loads(path.read_text())
        estimates = payload.get("estimates")
        if estimates is None:
            raise DataError(f"{path}: no 'estimates' field")
        return Params.from_sequence(estimates[p] for p in PARAM_NAMES)
    sample = _load_chain(path)
    return Params.from_sequence(sample.draws.mean(axis=0))


def cmd_mttf(args) -> int:
    out = _outdir(args)
    source = Path(args.source)
    if source.suffix == ".json":
        theta = _theta_from_result_file(source)
        payload = {"mttf": mttf(theta), "method": "plug-in", "theta": theta.as_dict()}
    else:
        sample = _load_chain(source)
        values = [mttf(Params.from_sequence(row)) for row in sample.draws]
        payload = {
            "mttf": float(np.mean(values)),
            "method": "posterior-mean",
            "n_draws": len(values),
        }
    _write_json(out / "mttf.json", payload)
    _write_manifest(out, "mttf", {"source": str(source)}, input_path=source)
    return 0


def cmd_density_grid(args) -> int:
    out = _outdir(args)
    theta = _parse_theta(args.theta)
    xs = np.linspace(args.xmax / args.steps, args.xmax, args.steps)
    ys = np.linspace(args.ymax / args.steps, args.ymax, args.steps)
    rows = []
    for x in xs:
        for y in ys:
            rows.append((_fmt(x), _fmt(y), _fmt(density(float(x), float(y), theta))))
    _write_csv(out / "grid.csv", ["x", "y", "density"], rows)
    _write_manifest(
        out,
        "density-grid",
        {"theta": theta.as_dict(), "xmax": args.xmax, "ymax": args.ymax, "steps": args.steps},
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mobweibull",
        description=(
            "Marshall-Olkin bivariate Weibull model with distinct shape parameters: "
            "fitting, Bayesian analysis, prediction, and simulation for censored "
            "reliability data with two dependent failure modes."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="maximum likelihood fit with Wald intervals")
    p.add_argument("data", help="CSV file with columns time,cause")
    p.add_argument("--init", help="starting values a0,a1,a2,lambda", default=None)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--out", default=".")
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("bayes", help="Metropolis-Hastings posterior sampling")
    p.add_argument("data")
    p.add_argument("--hyper", help="a,b,a0,a1,a2,c1,c2 (default diffuse)", default=None)
    p.add_argument("--init", help="chain start a0,a1,a2,lambda", default=None)
    p.add_argument("--length", type=int, default=15500)
    p.add_argument("--burn-in", type=int, default=500, dest="burn_in")
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--proposal-sigma", default=None, dest="proposal_sigma")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(handler=cmd_bayes)

    p = sub.add_parser("predict", help="future-failure prediction from a fit or a chain")
    p.add_argument("source", help="fit.json (frequentist) or chain.csv (Bayesian)")
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--nstar", type=int, required=True)
    p.add_argument("--mode", choices=[m.value for m in FailureMode], default="any")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--out", default=".")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("simulate", help="Monte Carlo study over a (n, censoring) grid")
    p.add_argument("--config", required=True, help="study configuration JSON")
    p.add_argument("--out", default=".")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("sample", help="simulate a censored competing-risks dataset")
    p.add_argument("--theta", required=True, help="a0,a1,a2,lambda")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--censor-rate", type=float, default=0.0, dest="censor_rate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("km", help="Kaplan-Meier estimate, optionally overlaid with a fit")
    p.add_argument("data")
    p.add_argument("--overlay", default=None, help="fit.json or summary.json for the model curve")
    p.add_argument("--grid-points", type=int, default=201, dest="grid_points")
    p.add_argument("--out", default=".")
    p.set_defaults(handler=cmd_km)

    p = sub.add_parser("mttf", help="mean time to failure from a fit or a chain")
    p.add_argument("source")
    p.add_argument("--out", default=".")
    p.set_defaults(handler=cmd_mttf)

    p = sub.add_parser("density-grid", help="joint density on a grid, for surface plots")
    p.add_argument("--theta", required=True)
    p.add_argument("--xmax", type=float, required=True)
    p.add_argument("--ymax", type=float, required=True)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--out", default=".")
    p.set_defaults(handler=cmd_density_grid)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (QuadratureError, SingularInformationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
