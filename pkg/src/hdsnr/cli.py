"""Command-line interface.

    hdsnr estimate --data data.csv [--response y] [--sigma-model identity] [--level 0.95] [--output json]
    hdsnr simulate --config study.toml --out-dir results/ [--threads N] [--dump-data]
    hdsnr moments-check [--draws 100000] [--seed 0] [--case bW2b] [--point diag]

Exit codes: 0 ok, 1 internal error, 2 bad input, 3 estimator used outside its regime.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .errors import (CovarianceError, DegenerateSpectrumError, HDSNRError, RegimeError,
                     SingularDesignError)
from .estimators import (PointEstimates, estimate_identity, estimate_ols, estimate_spectral,
                         estimate_whitened)
from .model import AR1Estimated, Known, substream
from .serialization import (ConfigError, DataError, dumps, load_config, read_matrix_csv, read_sample_csv,
                            summary_document, write_raw_csv, write_sample_csv)
from .simharness import run_experiment
from .suffstats import compute_stats
from .uncertainty import Target, confidence_interval
from .wishart import MomentId, closed_form_moment, letac_reconstruct, mc_moment_oracle, population_moments

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_REGIME = 0, 1, 2, 3
REGIME_ERRORS = (RegimeError, SingularDesignError, DegenerateSpectrumError, CovarianceError)
MOMENT_Z_LIMIT = 4.0


# --------------------------------------------------------------------------
# estimate
# --------------------------------------------------------------------------

def _estimate(sample, model: str) -> PointEstimates:
    if model == "identity":
        return estimate_identity(compute_stats(sample))
    if model == "spectral":
        return estimate_spectral(compute_stats(sample))
    if model == "ols":
        return estimate_ols(sample)
    if model == "ar1":
        return estimate_whitened(sample, AR1Estimated())
    if model.startswith("known:"):
        return estimate_whitened(sample, Known(read_matrix_csv(model[len("known:"):])))
    raise DataError(f"unknown --sigma-model {model!r}")


def build_report(est: PointEstimates, level: float, model: str) -> dict:
    """EstimateReport as a plain dict (see schemas/estimate_report.schema.json)."""
    warnings = list(est.warnings)
    if est.negative_flag:
        warnings.append("negative point estimate reported as-is")
    if est.snr_hat is None:
        warnings.append("sigma2 estimate below guard: SNR not reported")
    if est.kind.value == "spectral":
        warnings.append("spectral interval uses m3 = m2_hat^2 / m1_hat")
    report = {
        "estimator": est.kind.value,
        "sigma_model": model,
        "sigma2": est.sigma2_hat,
        "tau2": est.tau2_hat,
        "snr": est.snr_hat,
        "snr_raw": est.snr_raw,
        "n": est.stats.n,
        "d": est.stats.d,
        "m1_hat": est.stats.m1_hat,
        "m2_hat": est.stats.m2_hat,
        "level": level,
    }
    for tgt in (Target.SIGMA2, Target.TAU2, Target.SNR):
        try:
            ci = confidence_interval(est, target=tgt, level=level)
            report[f"se_{tgt.value}"] = ci.se
            report[f"ci_{tgt.value}"] = [ci.lower, ci.upper]
        except HDSNRError as exc:
            report[f"se_{tgt.value}"] = None
            report[f"ci_{tgt.value}"] = None
            warnings.append(f"no {tgt.value} interval: {exc}")
    report["warnings"] = warnings
    return report


def _table(report: dict) -> str:
    def f(v):
        return "-" if v is None else f"{v:.6g}"

    lines = [f"estimator: {report['estimator']} ({report['sigma_model']})   n = {report['n']}   d = {report['d']}",
             f"{'target':<8}{'estimate':>14}{'se':>14}{'ci_lo':>14}{'ci_hi':>14}"]
    for key in ("sigma2", "tau2", "snr"):
        ci = report[f"ci_{key}"] or [None, None]
        lines.append(f"{key:<8}{f(report[key]):>14}{f(report['se_' + key]):>14}{f(ci[0]):>14}{f(ci[1]):>14}")
    lines.append(f"m1_hat = {f(report['m1_hat'])}   m2_hat = {f(report['m2_hat'])}")
    lines += [f"warning: {w}" for w in report["warnings"]]
    return "\n".join(lines)


def cmd_estimate(args) -> int:
    try:
        sample = read_sample_csv(args.data, args.response)
    except (DataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not 0 < args.level < 1:
        print("error: --level must lie in (0, 1)", file=sys.stderr)
        return EXIT_INPUT
    try:
        est = _estimate(sample, args.sigma_model)
    except REGIME_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except (DataError, HDSNRError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = build_report(est, args.level, args.sigma_model)
    print(dumps(report) if args.output == "json" else _table(report))
    return EXIT_OK


# --------------------------------------------------------------------------
# simulate
# --------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    try:
        cfg = load_config(args.config)
    except (ConfigError, DataError, HDSNRError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    hook = None
    if args.dump_data:
        data_dir = out / "data"
        data_dir.mkdir(exist_ok=True)

        def hook(r, sample):
            write_sample_csv(data_dir / f"rep_{r:05d}.csv", sample)

    try:
        result = run_experiment(cfg, threads=args.threads, on_sample=hook)
    except HDSNRError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    write_raw_csv(out / "raw.csv", result.rows)
    (out / "summary.json").write_text(dumps(summary_document(result)) + "\n")
    print(f"wrote {out / 'raw.csv'} ({len(result.rows)} rows) and {out / 'summary.json'}")
    return EXIT_OK


# --------------------------------------------------------------------------
# moments-check
# --------------------------------------------------------------------------

def moment_check_points() -> dict[str, tuple[np.ndarray, np.ndarray, int]]:
    """Fixed parameter points ``name -> (beta, Sigma, n)``."""
    rng = np.random.default_rng(20120607)
    A = rng.standard_normal((4, 4))
    return {
        "diag": (np.array([1.0, 0.0, 1.0]), np.diag([1.0, 2.0, 3.0]), 5),
        "random": (rng.standard_normal(4), A.T @ A / 4 + 0.5 * np.eye(4), 7),
        "identity": (np.array([1.0, 0.0]), np.eye(2), 3),
    }


def run_moment_checks(points, cases, draws: int, seed: int) -> list[dict]:
    all_points = moment_check_points()
    out = []
    for pi, name in enumerate(points):
        beta, Sigma, n = all_points[name]
        ms = population_moments(beta, Known(Sigma))
        for which in cases:
            cf = closed_form_moment(which, ms, n)
            lt = letac_reconstruct(which, beta, Sigma, n)
            mean, se = mc_moment_oracle(which, beta, Sigma, n, draws,
                                        substream(seed, pi, list(MomentId).index(which)))
            z = (mean - cf) / se if se > 0 else (0.0 if mean == cf else float("inf"))
            out.append({"point": name, "moment": which.value, "closed_form": cf, "letac": lt,
                        "mc_mean": mean, "mc_se": se, "z": z, "pass": abs(z) <= MOMENT_Z_LIMIT})
    return out


def cmd_moments_check(args) -> int:
    cases = [MomentId(args.case)] if args.case else list(MomentId)
    points = args.point or ["diag", "random"]
    results = run_moment_checks(points, cases, args.draws, args.seed)
    print(f"{'point':<9}{'moment':<15}{'closed_form':>16}{'letac':>16}{'mc_mean':>16}{'mc_se':>12}{'z':>8}  status")
    for r in results:
        print(f"{r['point']:<9}{r['moment']:<15}{r['closed_form']:>16.8g}{r['letac']:>16.8g}"
              f"{r['mc_mean']:>16.8g}{r['mc_se']:>12.4g}{r['z']:>8.2f}  {'PASS' if r['pass'] else 'FAIL'}")
    ok = all(r["pass"] for r in results)
    print(f"{sum(r['pass'] for r in results)}/{len(results)} within |z| <= {MOMENT_Z_LIMIT:g}")
    return EXIT_OK if ok else 1


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hdsnr", description=__doc__.split("\n\n")[0],
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="estimate sigma^2, tau^2 and SNR from a CSV file",
                       description="Columns are selected by header name: --response names y and every "
                                   "other column is a predictor. Numbers use a decimal point.")
    e.add_argument("--data", required=True, help="CSV file with a header row")
    e.add_argument("--response", default="y", help="name of the response column (default: y)")
    e.add_argument("--sigma-model", default="identity",
                   help="identity | known:<path to d x d csv> | ar1 | spectral | ols (default: identity)")
    e.add_argument("--level", type=float, default=0.95, help="confidence level (default: 0.95)")
    e.add_argument("--output", choices=["json", "table"], default="json")
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("simulate", help="run a simulation study described by a TOML config")
    s.add_argument("--config", required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads (default: all)")
    s.add_argument("--dump-data", action="store_true", help="also write every simulated dataset to out-dir/data/")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("moments-check", help="compare Wishart moment closed forms with Monte Carlo")
    m.add_argument("--draws", type=int, default=100_000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--case", choices=[w.value for w in MomentId])
    m.add_argument("--point", action="append", choices=["diag", "random", "identity"],
                   help="parameter point(s) to check (default: diag and random)")
    m.set_defaults(func=cmd_moments_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # pragma: no cover - last-resort exit code contract
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
