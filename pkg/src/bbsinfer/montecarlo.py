"""Seeded Monte Carlo experiment engine.

Each replication draws its random streams from a counter-based key
(master_seed, cell, replication, purpose), so reports are bit-identical for
a given master seed regardless of how many worker processes are used.
Replications whose fits fail are counted as nonconvergences; bias and MSE
aggregate over the converged ones only.
"""

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .distributions import BbsParams, Gbs2Params, bbs_sample, gbs2_sample
from .errors import BootstrapError, NonconvergenceError, QuadratureError
from .estimation import fit_bbs, fit_gbs2
from .likelihood import PenaltySpec, better_bootstrap_weights
from .nonnested import nonnested_p_values, outcome_from_p_values
from .onesided import slr, slr_bootstrap, slr_c1, slr_c2
from .twosided import (
    TestSpec,
    bartlett_bootstrap_lr,
    bootstrap_two_sided,
    lr_test,
    score_test,
    wald_test,
)

STUDIES = ("estimation", "size", "power", "one_sided", "nonnested", "phi_grid")

ESTIMATORS = ("mle", "mle_jp", "mle_p", "mle_bboot")
TWO_SIDED_TESTS = ("lr", "score", "wald", "lr_pb", "lr_bbc", "score_pb")
ONE_SIDED_TESTS = ("slr", "slr_c1", "slr_c2", "slr_bp")

# purpose tags for substream derivation
_PURPOSE_DATA = 0
_PURPOSE_BOOT = 1
_PURPOSE_WEIGHTS = 2

_PARAM_NAMES = {"bbs": ("alpha", "beta", "gamma"), "gbs2": ("alpha", "beta", "nu")}


@dataclass(frozen=True)
class SimConfig:
    """Description of one simulation study."""

    study: str
    true_params: tuple = (0.5, 1.0, 0.0)
    true_model: str = "bbs"
    sample_sizes: tuple = (50,)
    replications: int = 1000
    penalty_kind: str = "modified"
    penalty_power: float = 1.0
    estimators: tuple = ("mle_p",)
    tests: tuple = ()
    test_parameter: str = "gamma"
    null_value: float = 0.0
    alternative: str = "two_sided"
    B: int = 299
    epsilons: tuple = (0.1, 0.05, 0.01)
    phi_grid: tuple = ()
    gamma_grid: tuple = ()
    master_seed: int = 0

    def __post_init__(self):
        if self.study not in STUDIES:
            raise ValueError(f"unknown study {self.study!r}")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.study == "phi_grid" and (not self.phi_grid or not self.gamma_grid):
            raise ValueError("phi_grid study needs nonempty phi and gamma grids")
        for name in ("true_params", "sample_sizes", "estimators", "tests",
                     "epsilons", "phi_grid", "gamma_grid"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def penalty(self):
        return PenaltySpec(self.penalty_kind, self.penalty_power)

    @classmethod
    def from_file(cls, path):
        """Load a config from JSON or from flat key=value lines."""
        text = open(path).read()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError:
            raw = {}
            for line in text.splitlines():
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, _, value = line.partition("=")
                raw[key.strip()] = json.loads(value.strip())
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)


@dataclass
class SimReport:
    """Aggregated study results: one row per report cell."""

    config: SimConfig
    rows: list = field(default_factory=list)

    COLUMNS = (
        "study", "n", "label", "parameter", "epsilon", "gamma", "phi",
        "bias", "mse", "rejection_rate", "mc_se",
        "replications", "converged", "nf", "pnf", "excluded",
    )

    def to_csv(self, path):
        with open(path, "w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=self.COLUMNS)
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: _format_cell(row.get(k)) for k in self.COLUMNS})

    def to_json(self, path):
        payload = {"schema_version": 1, "config": asdict(self.config), "rows": self.rows}
        with open(path, "w") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def _rng(config, cell_index, rep, purpose):
    key = (config.master_seed, cell_index, rep, purpose)
    return np.random.default_rng(np.random.SeedSequence(key))


def _true_bbs(config, gamma=None):
    alpha, beta, g = config.true_params
    return BbsParams(alpha, beta, g if gamma is None else gamma)


def _draw_data(config, n, rng):
    if config.true_model == "bbs":
        return bbs_sample(n, BbsParams(*config.true_params), rng)
    return gbs2_sample(n, Gbs2Params(*config.true_params), rng)


# ---------------------------------------------------------------------------
# per-replication workers (top level so they pickle for process pools)

def _fit_for_estimator(label, x, config, rng_weights):
    if label == "mle":
        return fit_bbs(x, PenaltySpec("none"))
    if label == "mle_jp":
        return fit_bbs(x, PenaltySpec("jeffreys"))
    if label == "mle_p":
        return fit_bbs(x, PenaltySpec("modified", config.penalty_power))
    if label == "mle_bboot":
        weights = better_bootstrap_weights(x, config.B, rng_weights)
        return fit_bbs(x, PenaltySpec("none"), weights=weights)
    raise ValueError(f"unknown estimator {label!r}")


def _rep_estimation(config, cell_index, cell, rep):
    n = cell[0]
    x = _draw_data(config, n, _rng(config, cell_index, rep, _PURPOSE_DATA))
    record = {}
    for label in config.estimators:
        rng_w = _rng(config, cell_index, rep, _PURPOSE_WEIGHTS)
        try:
            fit = _fit_for_estimator(label, x, config, rng_w)
        except QuadratureError:
            record[label] = None
            continue
        record[label] = tuple(fit.params.as_array()) if fit.converged else None
    return record

def _rep_size_power(config, cell_index, cell, rep):
    n = cell[0]
    x = _draw_data(config, n, _rng(config, cell_index, rep, _PURPOSE_DATA))
    spec = TestSpec(config.test_parameter, config.null_value, config.alternative)
    penalty = config.penalty
    record = {}
    for index, label in enumerate(config.tests):
        rng_b = _rng(config, cell_index, rep, _PURPOSE_BOOT + index)
        try:
            if label == "lr":
                result = lr_test(x, spec, penalty)
            elif label == "score":
                result = score_test(x, spec, penalty)
            elif label == "wald":
                result = wald_test(x, spec, penalty)
            elif label == "lr_pb":
                result = bootstrap_two_sided(x, spec, penalty, "lr", config.B, rng_b)
            elif label == "score_pb":
                result = bootstrap_two_sided(x, spec, penalty, "score", config.B, rng_b)
            elif label == "lr_bbc":
                result = bartlett_bootstrap_lr(x, spec, penalty, config.B, rng_b)
            else:
                raise ValueError(f"unknown test {label!r}")
        except (NonconvergenceError, BootstrapError, QuadratureError):
            record[label] = None
            continue
        record[label] = result.p_value
    return record


def _rep_one_sided(config, cell_index, cell, rep):
    n = cell[0]
    x = _draw_data(config, n, _rng(config, cell_index, rep, _PURPOSE_DATA))
    spec = TestSpec(config.test_parameter, config.null_value, "less")
    penalty = config.penalty
    record = {}
    for index, label in enumerate(config.tests):
        rng_b = _rng(config, cell_index, rep, _PURPOSE_BOOT + index)
        try:
            if label == "slr":
                result = slr(x, spec, penalty)
            elif label == "slr_c1":
                result = slr_c1(x, spec, penalty)
            elif label == "slr_c2":
                result = slr_c2(x, spec, penalty)
            elif label == "slr_bp":
                result = slr_bootstrap(x, spec, penalty, config.B, rng_b)
            else:
                raise ValueError(f"unknown test {label!r}")
        except (NonconvergenceError, BootstrapError, QuadratureError):
            record[label] = None
            continue
        if result.diagnostics.get("reason") == "nonpositive correction ratio":
            record[label] = "excluded"
        else:
            record[label] = result.p_value
    return record


def _rep_nonnested(config, cell_index, cell, rep):
    n = cell[0]
    x = _draw_data(config, n, _rng(config, cell_index, rep, _PURPOSE_DATA))
    rng_b = _rng(config, cell_index, rep, _PURPOSE_BOOT)
    try:
        w, p_f, p_g, _ = nonnested_p_values(x, config.B, rng_b, config.penalty)
    except (NonconvergenceError, BootstrapError, QuadratureError):
        return None
    return (w, p_f, p_g)


def _rep_phi_grid(config, cell_index, cell, rep):
    gamma, phi = cell
    n = config.sample_sizes[0]
    rng_d = _rng(config, cell_index, rep, _PURPOSE_DATA)
    x = bbs_sample(n, _true_bbs(config, gamma=gamma), rng_d)
    try:
        fit = fit_bbs(x, PenaltySpec("modified", phi))
    except QuadratureError:
        return None
    return tuple(fit.params.as_array()) if fit.converged else None


_WORKERS = {
    "estimation": _rep_estimation,
    "size": _rep_size_power,
    "power": _rep_size_power,
    "one_sided": _rep_one_sided,
    "nonnested": _rep_nonnested,
    "phi_grid": _rep_phi_grid,
}


def _cells(config):
    if config.study == "phi_grid":
        return [(g, f) for g in config.gamma_grid for f in config.phi_grid]
    return [(n,) for n in config.sample_sizes]


def _run_one(args):
    config, cell_index, cell, rep = args
    return _WORKERS[config.study](config, cell_index, cell, rep)


def _collect(config, threads):
    cells = _cells(config)
    tasks = [
        (config, cell_index, cell, rep)
        for cell_index, cell in enumerate(cells)
        for rep in range(config.replications)
    ]
    if threads <= 1:
        results = [_run_one(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_one, tasks, chunksize=8))
    per_cell = {}
    for (_, cell_index, cell, rep), result in zip(tasks, results):
        per_cell.setdefault(cell_index, []).append(result)
    return cells, per_cell


def _binomial_se(p, m):
    if m <= 0:
        return None
    return float(np.sqrt(p * (1.0 - p) / m))


def run_study(config: SimConfig, threads: int = 1):
    """Run the configured study and aggregate results into a SimReport."""
    cells, per_cell = _collect(config, threads)
    reps = config.replications
    rows = []

    for cell_index, cell in enumerate(cells):
        records = per_cell[cell_index]
        if config.study in ("estimation", "phi_grid"):
            rows.extend(_aggregate_estimates(config, cell, records))
        elif config.study in ("size", "power", "one_sided"):
            rows.extend(_aggregate_tests(config, cell, records))
        elif config.study == "nonnested":
            rows.extend(_aggregate_nonnested(config, cell, records))
    return SimReport(config, rows)


def _aggregate_estimates(config, cell, records):
    rows = []
    if config.study == "phi_grid":
        gamma, phi = cell
        n = config.sample_sizes[0]
        labels = {"mle_p": records}
        true = _true_bbs(config, gamma=gamma).as_array()
        extra = {"gamma": gamma, "phi": phi}
    else:
        n = cell[0]
        labels = {
            label: [r[label] for r in records] for label in config.estimators
        }
        true = np.asarray(config.true_params, dtype=float)
        extra = {}
    names = _PARAM_NAMES[config.true_model]
    reps = config.replications
    for label, fits in labels.items():
        good = np.array([f for f in fits if f is not None], dtype=float)
        nf = reps - len(good)
        for j, name in enumerate(names):
            row = {
                "study": config.study, "n": n, "label": label, "parameter": name,
                "replications": reps, "converged": len(good), "nf": nf,
                "pnf": nf / reps, **extra,
            }
            if len(good):
                err = good[:, j] - true[j]
                row["bias"] = float(np.mean(err))
                row["mse"] = float(np.mean(np.square(err)))
            rows.append(row)
    return rows


def _aggregate_tests(config, cell, records):
    rows = []
    n = cell[0]
    reps = config.replications
    for label in config.tests:
        values = [r[label] for r in records]
        excluded = sum(1 for v in values if v == "excluded")
        pvals = np.array([v for v in values if v is not None and v != "excluded"],
                         dtype=float)
        nf = sum(1 for v in values if v is None)
        for eps in config.epsilons:
            rate = float(np.mean(pvals < eps)) if len(pvals) else None
            rows.append({
                "study": config.study, "n": n, "label": label, "epsilon": eps,
                "rejection_rate": rate,
                "mc_se": _binomial_se(rate, len(pvals)) if rate is not None else None,
                "replications": reps, "converged": len(pvals), "nf": nf,
                "pnf": nf / reps, "excluded": excluded,
            })
    return rows


def _aggregate_nonnested(config, cell, records):
    rows = []
    n = cell[0]
    reps = config.replications
    good = [r for r in records if r is not None]
    nf = reps - len(good)
    for eps in config.epsilons:
        outcomes = {"R1": 0, "R2": 0, "R3": 0, "R4": 0}
        selected = {"BBS": 0, "GBS2": 0, "none": 0}
        for w, p_f, p_g in good:
            outcome, choice = outcome_from_p_values(w, p_f, p_g, eps)
            outcomes[outcome] += 1
            selected[choice] += 1
        m = len(good)
        for key, count in list(outcomes.items()) + list(selected.items()):
            rate = count / m if m else None
            rows.append({
                "study": config.study, "n": n, "label": key, "epsilon": eps,
                "rejection_rate": rate,
                "mc_se": _binomial_se(rate, m) if rate is not None else None,
                "replications": reps, "converged": m, "nf": nf, "pnf": nf / reps,
            })
    return rows


def phi_sensitivity(config: SimConfig, threads: int = 1):
    """MSE and nonconvergence surface over the (gamma, phi) grid."""
    if config.study != "phi_grid":
        raise ValueError("phi_sensitivity requires a phi_grid study config")
    return run_study(config, threads)
