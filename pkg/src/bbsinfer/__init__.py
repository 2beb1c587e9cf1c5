"""Inference toolkit for the bimodal Birnbaum-Saunders (BBS) distribution.

Provides distribution functions for the BBS and GBS2 laws, penalized
maximum likelihood estimation that is robust to monotone-likelihood
failure, corrected and bootstrap hypothesis tests, nonnested model
selection between the two laws, and a seeded Monte Carlo harness.
"""

from .distributions import (
    BbsParams,
    Gbs2Params,
    bbs_cdf,
    bbs_logpdf,
    bbs_moment,
    bbs_pdf,
    bbs_quantile,
    bbs_sample,
    gbs2_cdf,
    gbs2_logpdf,
    gbs2_pdf,
    gbs2_quantile,
    gbs2_sample,
    validate_sample,
)
from .likelihood import (
    BetterBootstrapWeights,
    InfoMatrices,
    PenaltySpec,
    better_bootstrap_weights,
    expected_info,
    jeffreys_penalty,
    loglik,
    modified_penalty,
    observed_info,
    penalized_objective,
    score,
    weighted_loglik,
)
from .estimation import FitOptions, FitResult, classify_convergence, fit_bbs, fit_gbs2, mmm_start
from .twosided import (
    TestResult,
    TestSpec,
    bartlett_bootstrap_lr,
    bootstrap_two_sided,
    lr_test,
    score_test,
    wald_test,
)
from .onesided import sample_space_derivatives, slr, slr_bootstrap, slr_c1, slr_c2
from .nonnested import NonnestedResult, decide, test_nonnested, w_ne
from .montecarlo import SimConfig, SimReport, phi_sensitivity, run_study

__version__ = "0.1.0"
