"""Maximum likelihood fitting for the BBS and GBS2 models.

Positive parameters are optimized on the log scale; BBS fits start from
the modified-method-of-moments values with gamma = 0 (the BS submodel) and
maximize the chosen penalized objective with BFGS.  Convergence is
classified against a gradient tolerance and a plausibility box, since a
monotone likelihood typically shows up as either a line-search failure or
estimates drifting to absurd magnitudes.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from ._normal import LOG_SQRT_2PI
from .distributions import BbsParams, Gbs2Params, validate_sample
from .errors import QuadratureError
from .likelihood import (
    BetterBootstrapWeights,
    PenaltySpec,
    loglik,
    observed_info,
    penalized_objective,
    weighted_loglik,
)

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERATIONS = "max_iterations"
STATUS_GRADIENT_NOT_SMALL = "gradient_not_small"
STATUS_IMPLAUSIBLE = "implausible_estimates"
STATUS_OBJECTIVE_FAILURE = "objective_failure"

# plausibility box operationalizing "very large (thus implausible)" estimates
ALPHA_MAX = 1e3
GAMMA_ABS_MAX = 50.0
BETA_RANGE_FACTOR = 1e3


@dataclass(frozen=True)
class FitOptions:
    """BFGS settings; part of the reproducibility contract."""

    max_iterations: int = 500
    gradient_tol: float = 1e-6
    # relative gradient tolerance used by the convergence classifier
    classify_tol: float = 1e-5


@dataclass(frozen=True)
class FitResult:
    params: object
    stderr: np.ndarray | None
    loglik_plain: float
    loglik_penalized: float
    status: str
    iterations: int
    grad_norm: float
    fixed: dict = field(default_factory=dict)

    @property
    def converged(self):
        return self.status == STATUS_CONVERGED


def mmm_start(x):
    """Modified-method-of-moments starting values (alpha0, beta0, 0).

    beta0 is the geometric mean of the arithmetic and harmonic means; alpha0
    follows from their ratio and is floored at 0.01 so a degenerate sample
    still produces a usable start.
    """
    x = validate_sample(x)
    if x.size < 2:
        raise ValueError("need at least two observations for starting values")
    s = float(np.mean(x))
    r = float(1.0 / np.mean(1.0 / x))
    beta0 = np.sqrt(s * r)
    alpha0 = np.sqrt(max(2.0 * (np.sqrt(s / r) - 1.0), 0.0))
    return BbsParams(max(alpha0, 0.01), beta0, 0.0)


def classify_convergence(report, params, grad_norm, x=None, options=None):
    """Map an optimizer report plus the estimates to a convergence status.

    converged requires optimizer success, a small relative gradient, and
    estimates inside the plausibility box.
    """
    options = options or FitOptions()
    if report.get("objective_failure"):
        return STATUS_OBJECTIVE_FAILURE
    if report.get("max_iterations"):
        return STATUS_MAX_ITERATIONS
    if not _plausible(params, x):
        return STATUS_IMPLAUSIBLE
    tol = options.classify_tol * (1.0 + abs(report.get("objective", 0.0)))
    if not report.get("success") or not grad_norm < tol:
        return STATUS_GRADIENT_NOT_SMALL
    return STATUS_CONVERGED


def _plausible(params, x=None):
    if isinstance(params, BbsParams):
        if not (params.alpha < ALPHA_MAX and abs(params.gamma) < GAMMA_ABS_MAX):
            return False
        beta = params.beta
    else:
        if not (params.alpha < ALPHA_MAX and params.nu < ALPHA_MAX):
            return False
        beta = params.beta
    if x is not None:
        lo = float(np.min(x)) / BETA_RANGE_FACTOR
        hi = float(np.max(x)) * BETA_RANGE_FACTOR
        if not (lo <= beta <= hi):
            return False
    return True


def _run_bfgs(fun, z0, options: FitOptions):
    """Minimize with BFGS and return (z, report, grad_norm, iterations).

    scipy's "precision loss" exit is accepted as success when the final
    gradient already satisfies the classifier tolerance; the line search
    simply could not improve further.
    """
    try:
        res = optimize.minimize(
            fun, z0, jac=True, method="BFGS",
            options={"maxiter": options.max_iterations, "gtol": options.gradient_tol},
        )
    except (FloatingPointError, OverflowError) as exc:
        return z0, {"success": False, "message": str(exc), "objective_failure": True}, np.inf, 0
    grad_norm = float(np.max(np.abs(res.jac)))
    objective = -float(res.fun)
    report = {
        "success": bool(res.success),
        "message": res.message,
        "objective": objective,
        "max_iterations": res.status == 1,
    }
    if not res.success and res.status == 2:
        # precision-loss exit with a gradient that is already small enough
        if grad_norm < FitOptions().classify_tol * (1.0 + abs(objective)):
            report["success"] = True
    return res.x, report, grad_norm, int(res.nit)


_BBS_NAMES = ("alpha", "beta", "gamma")


def fit_bbs(x, penalty: PenaltySpec = PenaltySpec("none"), options: FitOptions | None = None,
            weights: BetterBootstrapWeights | None = None, fixed: dict | None = None,
            start: BbsParams | None = None):
    """Maximize the (penalized, optionally weighted) BBS objective.

    fixed maps parameter names to pinned values, which is how restricted
    fits for tests are produced.  Optimization runs over (log alpha,
    log beta, gamma) for the free coordinates.
    """
    x = validate_sample(x)
    options = options or FitOptions()
    fixed = dict(fixed or {})
    for name in fixed:
        if name not in _BBS_NAMES:
            raise ValueError(f"unknown parameter {name!r}")

    start = start if start is not None else mmm_start(x)
    theta0 = {"alpha": start.alpha, "beta": start.beta, "gamma": start.gamma}
    theta0.update(fixed)
    free = [name for name in _BBS_NAMES if name not in fixed]

    def to_theta(z):
        vals = dict(fixed)
        for name, zj in zip(free, z):
            vals[name] = np.exp(zj) if name in ("alpha", "beta") else zj
        return np.array([vals["alpha"], vals["beta"], vals["gamma"]])

    def from_theta(vals):
        return np.array([
            np.log(vals[name]) if name in ("alpha", "beta") else vals[name]
            for name in free
        ])

    def negative(z):
        theta = to_theta(z)
        try:
            value, grad = penalized_objective(theta, x, penalty, weights=weights)
        except QuadratureError:
            return np.inf, np.zeros(len(free))
        if not np.isfinite(value):
            return np.inf, np.zeros(len(free))
        # chain rule for the log-reparametrized coordinates
        chain = np.array([
            theta[0] * grad[0], theta[1] * grad[1], grad[2]
        ])
        g = np.array([chain[_BBS_NAMES.index(name)] for name in free])
        return -value, -g

    z0 = from_theta(theta0)
    v0 = negative(z0)[0]
    if not np.isfinite(v0):
        params0 = BbsParams(theta0["alpha"], theta0["beta"], theta0["gamma"])
        return FitResult(params0, None, -np.inf, -np.inf,
                         STATUS_OBJECTIVE_FAILURE, 0, np.inf, fixed)

    z, report, grad_norm, nit = _run_bfgs(negative, z0, options)
    theta = to_theta(z)
    params = BbsParams(*theta)
    status = classify_convergence(report, params, grad_norm, x, options)

    plain = loglik(theta, x) if weights is None else weighted_loglik(theta, x, weights)
    penalized = plain
    if penalty.kind != "none":
        try:
            penalized = penalized_objective(theta, x, penalty, weights=weights)[0]
        except QuadratureError:
            penalized = -np.inf

    stderr = None
    if status == STATUS_CONVERGED:
        stderr = _stderr_from_info(theta, x, penalty, free)
    return FitResult(params, stderr, plain, penalized, status, nit, grad_norm, fixed)


def _stderr_from_info(theta, x, penalty, free):
    """Standard errors from the inverse penalized observed information.

    Returned only when the information matrix restricted to the free
    coordinates is positive definite; entries for fixed coordinates are NaN.
    """
    try:
        J = observed_info(theta, x, penalty)
    except QuadratureError:
        return None
    idx = [_BBS_NAMES.index(name) for name in free]
    sub = J[np.ix_(idx, idx)]
    try:
        eigvals = np.linalg.eigvalsh(sub)
        if np.min(eigvals) <= 0:
            return None
        cov = np.linalg.inv(sub)
    except np.linalg.LinAlgError:
        return None
    out = np.full(3, np.nan)
    out[idx] = np.sqrt(np.diag(cov))
    return out


def gbs2_loglik(theta, x):
    """GBS2 log-likelihood; theta = (alpha, beta, nu)."""
    alpha, beta, nu = (float(v) for v in theta)
    x = np.asarray(x, dtype=float)
    lr = nu * np.log(x / beta)
    w = 2.0 * np.sinh(lr)
    return float(np.sum(
        np.log(nu / alpha) - np.log(x) + np.logaddexp(lr, -lr)
        - 0.5 * np.square(w / alpha) - LOG_SQRT_2PI
    ))


def gbs2_score(theta, x):
    alpha, beta, nu = (float(v) for v in theta)
    x = np.asarray(x, dtype=float)
    lr = nu * np.log(x / beta)
    a_pow = np.exp(lr)
    b_pow = np.exp(-lr)
    w = a_pow - b_pow
    s = a_pow + b_pow
    u = w / alpha
    logx = np.log(x / beta)
    d_alpha = float(np.sum(np.square(u) - 1.0) / alpha)
    d_beta = float(np.sum(-nu * w / (beta * s) + u * nu * s / (alpha * beta)))
    d_nu = float(np.sum(1.0 / nu + w * logx / s - u * s * logx / alpha))
    return np.array([d_alpha, d_beta, d_nu])


def fit_gbs2(x, options: FitOptions | None = None):
    """Maximize the GBS2 log-likelihood over (log alpha, log beta, log nu).

    Start: beta0 = median, nu0 = 1, alpha0 = standard deviation of
    w_i = x_i/beta0 - beta0/x_i.
    """
    x = validate_sample(x)
    options = options or FitOptions()
    beta0 = float(np.median(x))
    w0 = x / beta0 - beta0 / x
    alpha0 = max(float(np.std(w0)), 1e-2)
    z0 = np.log([alpha0, beta0, 1.0])

    def negative(z):
        theta = np.exp(z)
        with np.errstate(over="ignore", invalid="ignore"):
            value = gbs2_loglik(theta, x)
            grad = gbs2_score(theta, x)
        if not (np.isfinite(value) and np.all(np.isfinite(grad))):
            return np.inf, np.zeros(3)
        return -value, -grad * theta

    if not np.isfinite(negative(z0)[0]):
        return FitResult(Gbs2Params(alpha0, beta0, 1.0), None, -np.inf, -np.inf,
                         STATUS_OBJECTIVE_FAILURE, 0, np.inf)

    z, report, grad_norm, nit = _run_bfgs(negative, z0, options)
    theta = np.exp(z)
    params = Gbs2Params(*theta)
    status = classify_convergence(report, params, grad_norm, x, options)
    plain = gbs2_loglik(theta, x)

    stderr = None
    if status == STATUS_CONVERGED:
        stderr = _gbs2_stderr(theta, x)
    return FitResult(params, stderr, plain, plain, status, nit, grad_norm)


def _gbs2_stderr(theta, x):
    theta = np.asarray(theta, dtype=float)
    H = np.empty((3, 3))
    for j in range(3):
        h = 1e-5 * max(1.0, abs(theta[j]))
        up, dn = theta.copy(), theta.copy()
        up[j] += h
        dn[j] -= h
        H[:, j] = (gbs2_score(up, x) - gbs2_score(dn, x)) / (2.0 * h)
    J = -0.5 * (H + H.T)
    try:
        if np.min(np.linalg.eigvalsh(J)) <= 0:
            return None
        return np.sqrt(np.diag(np.linalg.inv(J)))
    except np.linalg.LinAlgError:
        return None
