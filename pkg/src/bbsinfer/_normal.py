"""Tail-safe standard normal helpers shared across the package.

Everything here works in log space where the naive formula would underflow;
the target operating range is |gamma| up to about 30.
"""

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri, ndtri_exp

LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def norm_pdf(y):
    return np.exp(-0.5 * np.square(y) - LOG_SQRT_2PI)


def norm_logpdf(y):
    return -0.5 * np.square(y) - LOG_SQRT_2PI


def norm_cdf(y):
    return ndtr(y)


def norm_ppf(p):
    return ndtri(p)


def log_norm_cdf(y):
    return log_ndtr(y)


def omega(gamma):
    """Inverse Mills ratio phi(gamma) / Phi(-gamma), stable for large gamma."""
    return np.exp(norm_logpdf(gamma) - log_ndtr(-np.asarray(gamma, dtype=float)))


def truncnorm_ppf(u, gamma):
    """Quantile of the standard normal truncated to (gamma, inf).

    Solves Phi(-y) = (1 - u) * Phi(-gamma) in log space, so it stays exact
    deep in the upper tail.
    """
    u = np.asarray(u, dtype=float)
    return -ndtri_exp(np.log1p(-u) + log_ndtr(-np.asarray(gamma, dtype=float)))
