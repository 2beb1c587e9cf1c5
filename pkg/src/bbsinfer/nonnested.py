"""Bootstrap nonnested testing between the BBS and GBS2 models.

Neither law nests the other, so each is tested as a null in turn with its
own parametric bootstrap. The statistic is the log-likelihood difference
w_ne = l_f - l_g, where l_f is the plain BBS log-likelihood at the
penalized-objective maximizer (keeping it comparable to the plain GBS2
value l_g).  Rejecting under H_f favors GBS2, rejecting under H_g favors
BBS; the four reject/not-reject combinations map to outcomes R1-R4.
"""

from dataclasses import dataclass, field

import numpy as np

from .distributions import bbs_sample, gbs2_sample, validate_sample
from .errors import BootstrapError, NonconvergenceError
from .estimation import FitOptions, fit_bbs, fit_gbs2
from .likelihood import PenaltySpec

OUTCOME_BOTH_OK = "R1"
OUTCOME_BBS = "R2"
OUTCOME_GBS2 = "R3"
OUTCOME_NEITHER = "R4"

BOOTSTRAP_FAILURE_LIMIT = 0.2


@dataclass(frozen=True)
class NonnestedResult:
    w_ne: float
    p_f: float
    p_g: float
    outcome: str
    selected: str
    diagnostics: dict = field(default_factory=dict)


def _fit_both(x, penalty, options):
    fit_f = fit_bbs(x, penalty, options)
    fit_g = fit_gbs2(x, options)
    bad = [f.status for f in (fit_f, fit_g) if not f.converged]
    if bad:
        raise NonconvergenceError("BBS/GBS2 fit failed", bad)
    return fit_f, fit_g


def w_ne(x, penalty: PenaltySpec = PenaltySpec("modified"),
         options: FitOptions | None = None):
    """Log-likelihood difference l_f - l_g at the fitted parameter values."""
    x = validate_sample(x)
    fit_f, fit_g = _fit_both(x, penalty, options)
    return float(fit_f.loglik_plain - fit_g.loglik_plain)


def _bootstrap_w(x, null_model, fit_f, fit_g, B, rng, penalty, options):
    n = x.size
    values = []
    discarded = 0
    for child in rng.spawn(B):
        if null_model == "Hf":
            x_star = bbs_sample(n, fit_f.params, child)
        else:
            x_star = gbs2_sample(n, fit_g.params, child)
        try:
            f_star, g_star = _fit_both(x_star, penalty, options)
        except NonconvergenceError:
            discarded += 1
            continue
        values.append(f_star.loglik_plain - g_star.loglik_plain)
    if discarded > BOOTSTRAP_FAILURE_LIMIT * B:
        raise BootstrapError(f"{discarded} of {B} bootstrap replicates failed to converge")
    return np.asarray(values), discarded


def test_nonnested(x, null_model: str, B: int = 999,
                   rng: np.random.Generator | None = None,
                   penalty: PenaltySpec = PenaltySpec("modified"),
                   options: FitOptions | None = None):
    """Bootstrap p-value for one null hypothesis, "Hf" (BBS) or "Hg" (GBS2).

    Pseudo-samples come from the fitted null model. Under Hf small w_ne is
    evidence against the null, so p = (#{w* < w} + 1) / (B + 1); under Hg
    the rejection direction flips to p = (#{w* > w} + 1) / (B + 1).
    """
    if null_model not in ("Hf", "Hg"):
        raise ValueError("null_model must be 'Hf' or 'Hg'")
    if B < 99:
        raise ValueError("B must be at least 99")
    x = validate_sample(x)
    rng = rng if rng is not None else np.random.default_rng()
    fit_f, fit_g = _fit_both(x, penalty, options)
    w = float(fit_f.loglik_plain - fit_g.loglik_plain)
    stars, _ = _bootstrap_w(x, null_model, fit_f, fit_g, B, rng, penalty, options)
    if null_model == "Hf":
        count = np.count_nonzero(stars < w)
    else:
        count = np.count_nonzero(stars > w)
    return float((count + 1) / (B + 1))


def nonnested_p_values(x, B, rng, penalty: PenaltySpec = PenaltySpec("modified"),
                       options: FitOptions | None = None):
    """Statistic and both bootstrap p-values sharing one pair of substreams.

    Returns (w_ne, p_f, p_g, diagnostics); the two bootstrap loops use
    independent substreams of the supplied generator.
    """
    x = validate_sample(x)
    fit_f, fit_g = _fit_both(x, penalty, options)
    w = float(fit_f.loglik_plain - fit_g.loglik_plain)
    rng_f, rng_g = rng.spawn(2)
    stars_f, disc_f = _bootstrap_w(x, "Hf", fit_f, fit_g, B, rng_f, penalty, options)
    stars_g, disc_g = _bootstrap_w(x, "Hg", fit_f, fit_g, B, rng_g, penalty, options)
    p_f = float((np.count_nonzero(stars_f < w) + 1) / (B + 1))
    p_g = float((np.count_nonzero(stars_g > w) + 1) / (B + 1))
    return w, p_f, p_g, {"discarded_f": disc_f, "discarded_g": disc_g}


def outcome_from_p_values(w, p_f, p_g, epsilon):
    """Map the reject/not-reject pair to an outcome and a selected model."""
    reject_f = p_f < epsilon
    reject_g = p_g < epsilon
    if not reject_f and not reject_g:
        return OUTCOME_BOTH_OK, ("BBS" if w > 0 else "GBS2")
    if not reject_f and reject_g:
        return OUTCOME_BBS, "BBS"
    if reject_f and not reject_g:
        return OUTCOME_GBS2, "GBS2"
    return OUTCOME_NEITHER, "none"


def decide(x, B: int = 999, epsilon: float = 0.05,
           rng: np.random.Generator | None = None,
           penalty: PenaltySpec = PenaltySpec("modified"),
           options: FitOptions | None = None):
    """Run both nonnested tests and apply the four-outcome decision rule.

    R1 keeps both models (w_ne breaks the tie), R2 selects BBS, R3 selects
    GBS2, R4 rejects both.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must be in (0, 1)")
    rng = rng if rng is not None else np.random.default_rng()
    w, p_f, p_g, diagnostics = nonnested_p_values(x, B, rng, penalty, options)
    outcome, selected = outcome_from_p_values(w, p_f, p_g, epsilon)
    return NonnestedResult(w, p_f, p_g, outcome, selected, diagnostics=diagnostics)
