"""
Computable side of the SRTS analysis: tail-bound lemmas, the h(x) rate function
and its inverse branches, the error-budget split, Gaussian KL, and the upper and
lower regret-bound curves.

Gamma distributions are rate-parameterized everywhere except
gamma_left_tail_bound, which keeps the shape-scale form the lemma is stated in.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import bisect
from scipy.special import gammaln

from .errors import DomainError
from .sr_metrics import gap_summary

logger = logging.getLogger("TheoryBounds")

H_INVERSE_MAXITER = 200
H_INVERSE_XTOL = 1e-15
H_INVERSE_RTOL = 1e-13


class BoundConstants(BaseModel):
    """Constants the analysis proves exist but never evaluates. Defaults give pure dominant-term curves."""
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    a7: float = 0.0
    a8: float = 0.0
    a9: float = 0.0
    a10: float = 0.0
    a11: float = 0.0
    c1: float = Field(default=0.625, gt=0)
    c2: float = Field(default=0.8, gt=0, lt=1)
    alpha_consistency: float = Field(default=0.1, gt=0, lt=1)

    @model_validator(mode="after")
    def check_c1(self):
        if self.c1 >= 1 - self.alpha_consistency:
            raise ValueError(
                f"c1 must be below 1 - alpha_consistency = {1 - self.alpha_consistency:g}, got {self.c1:g}"
            )
        return self


@dataclass(frozen=True)
class ThresholdTerms:
    """Exploration threshold u for one suboptimal arm at horizon n."""
    arm: int
    gamma: float
    eps_mu: float
    eps_sigma: float
    mean_branch: float
    variance_branch: float
    u: float

    @property
    def non_informative(self):
        return math.isinf(self.mean_branch) or math.isinf(self.variance_branch)


# Tail bounds

def gaussian_left_tail_bound(mu, precision_q, a):
    """P(X <= a) <= exp(-(q/2)(mu - a)^2) for X ~ Normal(mu, 1/q)."""
    if precision_q <= 0:
        raise DomainError(f"Precision must be positive, got {precision_q}")
    if a >= mu:
        raise DomainError(f"Left-tail bound needs a < mu, got a={a}, mu={mu}")
    return math.exp(-0.5 * precision_q * (mu - a) ** 2)


def _check_gamma_left(shape, rate, a):
    if shape <= 0 or rate <= 0:
        raise DomainError(f"Gamma shape and rate must be positive, got shape={shape}, rate={rate}")
    if not 0 < a < shape / rate:
        raise DomainError(f"Gamma left-tail bound needs 0 < a < mean={shape / rate:g}, got a={a}")


def gamma_left_tail_bound(shape, scale, a):
    """Closed-form left-tail bound exp(-(alpha*beta - a)^2 / (2*a*beta)), shape-scale form."""
    if scale <= 0:
        raise DomainError(f"Gamma scale must be positive, got {scale}")
    _check_gamma_left(shape, 1.0 / scale, a)
    return math.exp(-((shape * scale - a) ** 2) / (2.0 * a * scale))


def gamma_left_tail_bound_rate(shape, rate, a):
    """Shape-rate form of gamma_left_tail_bound: exp(-rate * (shape/rate - a)^2 / (2a))."""
    _check_gamma_left(shape, rate, a)
    return math.exp(-rate * (shape / rate - a) ** 2 / (2.0 * a))


def gamma_left_tail_chernoff(shape, rate, a):
    """
    Optimized Chernoff bound on P(X <= a), X ~ Gamma(shape, rate):
    exp(-shape * (1/x + log x - 1)) with x = shape / (rate * a).
    The closed form above relaxes this exponent and is not a valid bound once
    x is far from 1; this one always is.
    """
    _check_gamma_left(shape, rate, a)
    x = shape / (rate * a)
    return math.exp(-shape * (1.0 / x + math.log(x) - 1.0))


def gaussian_two_sided_tail(mu, sigma, x):
    """Lower and upper bounds on P(X > x) for X ~ Normal(mu, sigma^2), x > mu."""
    if sigma <= 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    if x <= mu:
        raise DomainError(f"Two-sided tail bounds need x > mu, got x={x}, mu={mu}")
    t = (x - mu) / sigma
    numerator = math.sqrt(2.0 / math.pi) * math.exp(-0.5 * t * t)
    lower = numerator / (t + math.sqrt(t * t + 4.0))
    upper = numerator / (t + math.sqrt(t * t + 8.0 / math.pi))
    return lower, upper


def _check_gamma_mills(shape, rate, x):
    if shape <= 1:
        raise DomainError(f"Gamma Mills bounds need shape > 1, got {shape}")
    if rate <= 0:
        raise DomainError(f"Gamma rate must be positive, got {rate}")
    if x <= (shape - 1) / rate:
        raise DomainError(f"Gamma Mills bounds need x > (shape-1)/rate = {(shape - 1) / rate:g}, got x={x}")


def gamma_mills_bounds(shape, rate, x):
    """Density-based sandwich on P(X >= x), evaluated in log space to avoid overflow."""
    _check_gamma_mills(shape, rate, x)
    log_core = (shape - 1) * math.log(x) - rate * x - gammaln(shape)
    lower = math.exp((shape - 1) * math.log(rate) + log_core)
    upper = math.exp(shape * math.log(rate) + log_core) / (rate - (shape - 1) / x)
    return lower, upper


def gamma_mills_ratio(shape, rate, x):
    """upper / lower of gamma_mills_bounds; tends to 1 as x grows."""
    _check_gamma_mills(shape, rate, x)
    return rate / (rate - (shape - 1) / x)


# h(x) and its inverse branches

def h(x):
    """h(x) = (x - 1 - log x) / 2 on x > 0. Accepts scalars or arrays."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0):
        raise DomainError(f"h is defined for x > 0 only, got {x}")
    value = (arr - 1.0 - np.log(arr)) / 2.0
    return float(value) if value.ndim == 0 else value


def _check_y(y):
    if not y >= 0:
        raise DomainError(f"h inverses need y >= 0, got {y}")


def h_plus_inv(y):
    """Largest x with h(x) = y (the root on [1, inf))."""
    _check_y(y)
    if y == 0:
        return 1.0
    upper = 1.0 + 2.0 * y + 2.0 * math.sqrt(y)
    while h(upper) < y:
        upper *= 2.0
    return bisect(lambda x: h(x) - y, 1.0, upper,
                  xtol=H_INVERSE_XTOL, rtol=H_INVERSE_RTOL, maxiter=H_INVERSE_MAXITER)


def h_minus_inv(y):
    """Smallest x with h(x) = y (the root in (0, 1]). Bisected in log x."""
    _check_y(y)
    if y == 0:
        return 1.0
    z = bisect(lambda z: (math.expm1(z) - z) / 2.0 - y, -2.0 * y - 1.0, 0.0,
               xtol=H_INVERSE_XTOL, rtol=H_INVERSE_RTOL, maxiter=H_INVERSE_MAXITER)
    return math.exp(z)


# Error budget

def epsilon_split(eps, mu1, sigma1_sq, sigmai_sq, rho, l0):
    """
    Split eps into the mean and variance budgets, weighted by 1/(l0 + rho*sigma_i^2)
    and mu1/(l0 + rho*sigma_1^2). Returns (eps_mu, eps_sigma, C).
    l0 = 0 is accepted as long as both denominators stay positive.
    """
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if mu1 <= 0:
        raise DomainError(f"The error-budget split needs mu1 > 0, got {mu1}")
    if l0 < 0 or rho < 0 or sigma1_sq < 0 or sigmai_sq < 0:
        raise DomainError("l0, rho and variances must be nonnegative")
    d1 = l0 + rho * sigma1_sq
    di = l0 + rho * sigmai_sq
    if d1 <= 0 or di <= 0:
        raise DomainError(f"Split denominators must be positive, got {d1} and {di}")

    w_mu = 1.0 / di
    w_sigma = mu1 / d1
    c = 1.0 / (w_mu + w_sigma)
    return w_mu * c * eps, w_sigma * c * eps, c


def precision_threshold(eps, sigma1_sq, rho, l0):
    """
    Precision level the optimal arm's tau must clear: rho(1 - eps)/(rho*sigma1^2 + eps*l0).
    l0 = 0 gives (1 - eps)/sigma1^2 for any rho; rho = 1 gives (1 - eps)/(sigma1^2 + eps*l0).
    """
    if not 0 < eps < 1:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    denominator = rho * sigma1_sq + eps * l0
    if denominator <= 0:
        raise DomainError(f"rho*sigma1^2 + eps*l0 must be positive, got {denominator}")
    return rho * (1.0 - eps) / denominator


def kl_gaussian(p, q):
    """KL(p || q) in nats for Gaussian arms."""
    if p.variance <= 0 or q.variance <= 0:
        raise DomainError("KL divergence needs positive variances")
    return (0.5 * math.log(q.variance / p.variance)
            + (p.variance + (p.mean - q.mean) ** 2) / (2.0 * q.variance) - 0.5)


# Regret-bound curves

def default_eps_rule(exponent=0.25):
    return lambda n: math.log(n) ** (-exponent)


def theorem1_coefficients(instance):
    """Per-arm coefficient multiplying E[s_i] in the pseudo-regret upper bound."""
    gaps = gap_summary(instance)
    rho, l0 = instance.rho, instance.l0
    variances = instance.variances
    total_var = float(np.sum(variances))
    half_lambda = gaps.lambda_max / 2.0
    correction = gaps.sharpe * rho * (half_lambda + total_var - variances) / (l0 + rho * half_lambda + rho * total_var)
    return gaps.delta + correction


def theorem1_upper_bound(instance, expected_pulls, constants):
    pulls = np.asarray(expected_pulls, dtype=float)
    if pulls.shape != (instance.k,):
        raise ValueError(f"expected_pulls must have one entry per arm ({instance.k}), got shape {pulls.shape}")
    if np.any(pulls < 0):
        raise DomainError("Expected pull counts must be nonnegative")
    return float(np.dot(theorem1_coefficients(instance), pulls)) + constants.a7


def exploration_threshold(instance, arm, n, eps):
    """
    u = max{2 log(2n) / (Gamma_i - eps_mu*l0)^2, log(2n) / h(sigma_i^2 (1 - eps_sigma/xi_1) / sigma_1^2)}
    with Gamma_i = mu_1 - mu_i. A branch whose denominator is not positive is
    +inf; an infinite branch is dropped from the max unless both are.
    """
    best = instance.optimal_arm
    if arm == best:
        raise ValueError(f"Arm {arm} is the optimal arm; the threshold is defined for suboptimal arms")
    opt, sub = instance.arms[best], instance.arms[arm]
    xi1 = instance.optimal_sharpe
    eps_mu, eps_sigma, _ = epsilon_split(eps, opt.mean, opt.variance, sub.variance, instance.rho, instance.l0)
    log2n = math.log(2.0 * n)

    gamma = opt.mean - sub.mean
    margin = gamma - eps_mu * instance.l0
    mean_branch = 2.0 * log2n / margin ** 2 if margin > 0 else math.inf

    ratio = sub.variance * (1.0 - eps_sigma / xi1) / opt.variance
    rate = h(ratio) if ratio > 0 else 0.0
    variance_branch = log2n / rate if rate > 0 else math.inf

    finite = [b for b in (mean_branch, variance_branch) if math.isfinite(b)]
    u = max(finite) if finite else math.inf
    return ThresholdTerms(arm, gamma, eps_mu, eps_sigma, mean_branch, variance_branch, u)


def theorem2_regret_curve(instance, n_grid, constants, eps_rule=None):
    """
    Finite-time SRTS regret bound for every n in n_grid, summed over suboptimal arms.
    Arms whose threshold still has an infinite branch at the largest n are logged.
    """
    eps_rule = eps_rule or default_eps_rule()
    coefficients = theorem1_coefficients(instance)
    suboptimal = [i for i in range(instance.k) if i != instance.optimal_arm]
    final_n = max(n_grid) if len(n_grid) else None
    flagged = []
    curve = []
    for n in n_grid:
        if n < 2:
            raise DomainError(f"Theorem 2 curve needs n >= 2, got {n}")
        log_n = math.log(n)
        lower_order = (constants.a8 * log_n ** 0.75 + constants.a9 * log_n ** 0.5
                       + constants.a10 * log_n ** 0.25 + constants.a11)
        eps = eps_rule(n)
        total = constants.a7
        for i in suboptimal:
            terms = exploration_threshold(instance, i, n, eps)
            if n == final_n and terms.non_informative and i not in flagged:
                flagged.append(i)
            total += (1.0 + terms.u + lower_order) * coefficients[i]
        curve.append(total)
    if flagged:
        logger.warning(f"⚠️ Non-informative Theorem 2 branch at n={final_n} for arms {flagged} (infinite branch dropped)")
    return np.array(curve)


def theorem3_arm_factors(instance):
    """(Delta_i - rho*xi_i*sigma_i^2/l0, KL(f_i, f_*)) per arm; both 0 at the optimal arm."""
    gaps = gap_summary(instance)
    best = instance.optimal_arm
    factors = gaps.delta - instance.rho * gaps.sharpe * instance.variances / instance.l0
    kl = np.array([kl_gaussian(arm, instance.arms[best]) for arm in instance.arms])
    factors[best] = 0.0
    kl[best] = 0.0
    return factors, kl


def theorem3_lower_bound_curve(instance, n_grid, constants):
    factors, kl = theorem3_arm_factors(instance)
    suboptimal = [i for i in range(instance.k) if i != instance.optimal_arm]
    negative = [i for i in suboptimal if factors[i] < 0]
    if negative:
        logger.warning(f"⚠️ Negative lower-bound factor for arms {negative}; those terms are vacuous and kept as-is")
    per_log_n = constants.c1 * constants.c2 * sum(factors[i] / kl[i] for i in suboptimal)
    return np.array([per_log_n * math.log(n) - constants.a7 for n in n_grid])
