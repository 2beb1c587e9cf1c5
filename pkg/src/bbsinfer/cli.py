"""Command-line front end.

Machine-readable JSON goes to standard output, human-readable summaries to
standard error.  Exit codes: 0 success, 1 usage or I/O failure, 2 a fit did
not converge (the JSON payload still reports the status).
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import BootstrapError, NonconvergenceError, QuadratureError
from .estimation import fit_bbs, fit_gbs2
from .likelihood import PenaltySpec
from .montecarlo import SimConfig, run_study
from .nonnested import decide
from .onesided import slr, slr_bootstrap, slr_c1, slr_c2
from .twosided import (
    TestSpec,
    bartlett_bootstrap_lr,
    bootstrap_two_sided,
    lr_test,
    score_test,
    wald_test,
)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NONCONVERGENCE = 2


class UsageError(Exception):
    pass


def load_data(path):
    """Read a single-column CSV of positive reals, optional header row."""
    values = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}")
    for lineno, line in enumerate(lines, start=1):
        text = line.split(",")[0].strip()
        if not text:
            continue
        try:
            value = float(text)
        except ValueError:
            if lineno == 1:
                continue  # header row
            raise UsageError(f"{path}:{lineno}: not a number: {text!r}")
        if not np.isfinite(value) or value <= 0:
            raise UsageError(f"{path}:{lineno}: values must be positive finite reals")
        values.append(value)
    if not values:
        raise UsageError(f"{path}: no data rows found")
    return np.asarray(values)


def _emit(payload, summary_lines=()):
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    for line in summary_lines:
        print(line, file=sys.stderr)


def _fit_payload(fit, names, n):
    theta = fit.params.as_array()
    k = len(names) - len(fit.fixed) if hasattr(fit, "fixed") and fit.fixed else len(names)
    aic = -2.0 * fit.loglik_plain + 2.0 * k
    bic = -2.0 * fit.loglik_plain + k * float(np.log(n))
    stderr = None
    if fit.stderr is not None:
        stderr = {name: (None if np.isnan(se) else float(se))
                  for name, se in zip(names, fit.stderr)}
    return {
        "estimates": {name: float(v) for name, v in zip(names, theta)},
        "stderr": stderr,
        "loglik": fit.loglik_plain,
        "loglik_penalized": fit.loglik_penalized,
        "aic": aic,
        "bic": bic,
        "status": fit.status,
        "iterations": fit.iterations,
        "grad_norm": fit.grad_norm,
    }


def cmd_fit(args):
    x = load_data(args.data)
    penalty = PenaltySpec(args.penalty, args.phi)
    if args.model == "gbs2":
        fit = fit_gbs2(x)
        names = ("alpha", "beta", "nu")
    elif args.model == "bs":
        fit = fit_bbs(x, PenaltySpec("none"), fixed={"gamma": 0.0})
        names = ("alpha", "beta", "gamma")
    else:
        fit = fit_bbs(x, penalty)
        names = ("alpha", "beta", "gamma")
    payload = {"model": args.model, "penalty": args.penalty, "phi": args.phi,
               "n": int(x.size), **_fit_payload(fit, names, x.size)}
    summary = [
        f"{args.model} fit on {x.size} observations: {fit.status}",
        "  " + "  ".join(f"{k}={v:.4g}" for k, v in payload["estimates"].items()),
    ]
    _emit(payload, summary)
    return EXIT_OK if fit.converged else EXIT_NONCONVERGENCE


_TEST_METHODS = {
    ("lr", "asymptotic"), ("lr", "bootstrap"), ("lr", "bartlett"),
    ("score", "asymptotic"), ("score", "bootstrap"),
    ("wald", "asymptotic"),
    ("slr", "asymptotic"), ("slr", "bootstrap"), ("slr", "c1"), ("slr", "c2"),
}

_SIDES = {"two": "two_sided", "less": "less", "greater": "greater"}


def cmd_test(args):
    if (args.type, args.method) not in _TEST_METHODS:
        raise UsageError(f"test type {args.type!r} does not support method {args.method!r}")
    if args.type in ("lr", "score", "wald") and args.side != "two":
        raise UsageError(f"{args.type} test is two-sided; use --type slr for one-sided tests")
    x = load_data(args.data)
    spec = TestSpec(args.param, args.null, _SIDES[args.side])
    penalty = PenaltySpec(args.penalty, args.phi)
    rng = np.random.default_rng(args.seed)
    try:
        if args.type == "slr":
            if args.method == "asymptotic":
                result = slr(x, spec, penalty)
            elif args.method == "bootstrap":
                result = slr_bootstrap(x, spec, penalty, args.B, rng)
            elif args.method == "c1":
                result = slr_c1(x, spec, penalty)
            else:
                result = slr_c2(x, spec, penalty)
        elif args.method == "bootstrap":
            result = bootstrap_two_sided(x, spec, penalty, args.type, args.B, rng)
        elif args.method == "bartlett":
            result = bartlett_bootstrap_lr(x, spec, penalty, args.B, rng)
        elif args.type == "lr":
            result = lr_test(x, spec, penalty)
        elif args.type == "score":
            result = score_test(x, spec, penalty)
        else:
            result = wald_test(x, spec, penalty)
    except (NonconvergenceError, BootstrapError, QuadratureError) as exc:
        _emit({"error": str(exc),
               "statuses": list(getattr(exc, "statuses", ()))},
              [f"test failed: {exc}"])
        return EXIT_NONCONVERGENCE
    payload = {
        "test": args.type, "method": args.method, "parameter": args.param,
        "null_value": args.null, "alternative": _SIDES[args.side],
        "statistic": result.statistic, "p_value": result.p_value,
        "reference": result.reference, "bootstrap_B": result.bootstrap_B,
        "diagnostics": {k: v for k, v in result.diagnostics.items()
                        if isinstance(v, (int, float, bool, str))},
    }
    _emit(payload, [f"{result.method}: statistic={result.statistic:.4f} "
                    f"p={result.p_value:.4f} ({result.reference})"])
    return EXIT_OK


def cmd_select(args):
    x = load_data(args.data)
    rng = np.random.default_rng(args.seed)
    penalty = PenaltySpec(args.penalty, args.phi)
    try:
        result = decide(x, args.B, args.epsilon, rng, penalty)
    except (NonconvergenceError, BootstrapError, QuadratureError) as exc:
        _emit({"error": str(exc),
               "statuses": list(getattr(exc, "statuses", ()))},
              [f"selection failed: {exc}"])
        return EXIT_NONCONVERGENCE
    payload = {
        "w_ne": result.w_ne, "p_f": result.p_f, "p_g": result.p_g,
        "outcome": result.outcome, "selected": result.selected,
        "B": args.B, "epsilon": args.epsilon, "diagnostics": result.diagnostics,
    }
    _emit(payload, [f"outcome {result.outcome}: selected {result.selected} "
                    f"(w_ne={result.w_ne:.4f}, p_f={result.p_f:.4f}, p_g={result.p_g:.4f})"])
    return EXIT_OK


def cmd_simulate(args):
    try:
        config = SimConfig.from_file(args.config)
    except (OSError, ValueError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad config {args.config}: {exc}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = run_study(config, threads=args.threads)
    csv_path = out_dir / f"{config.study}_report.csv"
    json_path = out_dir / f"{config.study}_report.json"
    report.to_csv(csv_path)
    report.to_json(json_path)
    summary = [f"{config.study} study: {len(report.rows)} report rows "
               f"({config.replications} replications)"]
    for row in report.rows[:20]:
        cells = ", ".join(f"{k}={_short(v)}" for k, v in row.items() if v is not None)
        summary.append("  " + cells)
    if len(report.rows) > 20:
        summary.append(f"  ... {len(report.rows) - 20} more rows")
    _emit({"report_csv": str(csv_path), "report_json": str(json_path),
           "rows": len(report.rows)}, summary)
    return EXIT_OK


def _short(value):
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bbsinfer",
        description="Fitting, testing, model selection, and simulation for "
                    "the bimodal Birnbaum-Saunders model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a model to a single-column CSV")
    fit.add_argument("--data", required=True)
    fit.add_argument("--model", choices=("bbs", "bs", "gbs2"), default="bbs")
    fit.add_argument("--penalty", choices=("none", "jeffreys", "modified"),
                     default="modified")
    fit.add_argument("--phi", type=float, default=1.0)
    fit.set_defaults(func=cmd_fit)

    test = sub.add_parser("test", help="hypothesis test on one parameter")
    test.add_argument("--data", required=True)
    test.add_argument("--param", choices=("alpha", "beta", "gamma"), default="gamma")
    test.add_argument("--null", type=float, default=0.0)
    test.add_argument("--type", choices=("lr", "score", "wald", "slr"), required=True)
    test.add_argument("--method",
                      choices=("asymptotic", "bootstrap", "bartlett", "c1", "c2"),
                      default="asymptotic")
    test.add_argument("--side", choices=("two", "less", "greater"), default="two")
    test.add_argument("--B", type=int, default=999)
    test.add_argument("--seed", type=int, default=None)
    test.add_argument("--penalty", choices=("none", "jeffreys", "modified"),
                      default="modified")
    test.add_argument("--phi", type=float, default=1.0)
    test.set_defaults(func=cmd_test)

    select = sub.add_parser("select", help="nonnested BBS vs GBS2 model selection")
    select.add_argument("--data", required=True)
    select.add_argument("--B", type=int, default=999)
    select.add_argument("--epsilon", type=float, default=0.05)
    select.add_argument("--seed", type=int, default=None)
    select.add_argument("--penalty", choices=("none", "jeffreys", "modified"),
                        default="modified")
    select.add_argument("--phi", type=float, default=1.0)
    select.set_defaults(func=cmd_select)

    simulate = sub.add_parser("simulate", help="run a Monte Carlo study from a config file")
    simulate.add_argument("--config", required=True)
    simulate.add_argument("--out", required=True)
    simulate.add_argument("--threads", type=int, default=1)
    simulate.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
