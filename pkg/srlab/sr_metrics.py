"""
Sharpe-ratio and regret accounting.

Conventions used throughout:
  * Sharpe ratio of an arm is mean / (l0 + rho * variance).
  * Every empirical variance is the biased, divide-by-count estimator.
  * Regret after m rounds is m * (optimal Sharpe - Sharpe of the pooled reward
    stream of the first m rounds).
"""
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDenominator, EmptySample, InsufficientData


@dataclass(frozen=True)
class RunTrace:
    """Arm choices and observed rewards of one replication, in round order."""
    choices: np.ndarray
    rewards: np.ndarray

    def __post_init__(self):
        choices = np.asarray(self.choices, dtype=np.int64)
        rewards = np.asarray(self.rewards, dtype=float)
        if choices.ndim != 1 or rewards.ndim != 1 or len(choices) != len(rewards):
            raise ValueError(f"choices and rewards must be 1-D and equally long, got {choices.shape} and {rewards.shape}")
        if len(choices) == 0:
            raise EmptySample("A run trace needs at least one round")
        if choices.min() < 0:
            raise IndexError(f"Negative arm index in trace: {int(choices.min())}")
        object.__setattr__(self, "choices", choices)
        object.__setattr__(self, "rewards", rewards)

    @property
    def horizon(self):
        return len(self.choices)

    def check_arms(self, k):
        if self.choices.max() >= k:
            raise IndexError(f"Trace pulls arm {int(self.choices.max())} but the instance has K={k}")


@dataclass(frozen=True)
class PullCounts:
    counts: np.ndarray

    @property
    def horizon(self):
        return int(np.sum(self.counts))


@dataclass(frozen=True)
class GapSummary:
    sharpe: np.ndarray
    delta: np.ndarray
    mean_gaps: np.ndarray
    lambda_max: float
    optimal_arm: int


def sharpe_ratio(mean, variance, rho, l0):
    denominator = l0 + rho * variance
    if denominator == 0:
        raise DegenerateDenominator(f"l0 + rho * variance is zero (l0={l0}, rho={rho}, variance={variance})")
    return mean / denominator


def empirical_sharpe(samples, rho, l0):
    """Plug-in Sharpe ratio of a sample, using the biased variance."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise EmptySample("Cannot compute an empirical Sharpe ratio from zero samples")
    mean = float(np.mean(x))
    variance = float(np.mean((x - mean) ** 2))
    return sharpe_ratio(mean, variance, rho, l0)


def algorithmic_stats(trace):
    """Pooled mean and biased variance of the whole reward stream."""
    mean = float(np.mean(trace.rewards))
    variance = float(np.mean((trace.rewards - mean) ** 2))
    return mean, variance


def algorithmic_variance_split(trace):
    """
    Split the pooled variance into the pull-weighted within-arm variance and the
    switching term (spread of per-arm means around the pooled mean).
    """
    n = trace.horizon
    k = int(trace.choices.max()) + 1
    counts = np.bincount(trace.choices, minlength=k)
    sums = np.bincount(trace.choices, weights=trace.rewards, minlength=k)
    pulled = counts > 0
    arm_means = np.zeros(k)
    arm_means[pulled] = sums[pulled] / counts[pulled]

    pooled_mean = float(np.mean(trace.rewards))
    within = float(np.sum((trace.rewards - arm_means[trace.choices]) ** 2)) / n
    switching = float(np.sum(counts[pulled] * (arm_means[pulled] - pooled_mean) ** 2)) / n
    return within, switching


def pull_counts(trace, k):
    trace.check_arms(k)
    return PullCounts(np.bincount(trace.choices, minlength=k))


def gap_summary(instance):
    sharpe = np.array(instance.sharpe)
    means = instance.means
    mean_gaps = means[:, None] - means[None, :]
    return GapSummary(
        sharpe=sharpe,
        delta=instance.optimal_sharpe - sharpe,
        mean_gaps=mean_gaps,
        lambda_max=float(np.max(mean_gaps ** 2)),
        optimal_arm=instance.optimal_arm,
    )


def realized_regret(trace, instance):
    """
    Regret of every prefix of the trace: entry m-1 is m * (xi* - pooled SR of
    rounds 1..m). Prefix moments come from cumulative sums of the rewards
    shifted by their overall mean, which keeps the cancellation small.
    """
    trace.check_arms(instance.k)
    x = trace.rewards
    shift = float(np.mean(x))
    y = x - shift
    m = np.arange(1, len(x) + 1, dtype=float)
    first = np.cumsum(y) / m
    second = np.cumsum(y * y) / m
    prefix_mean = shift + first
    prefix_var = np.maximum(second - first * first, 0.0)
    prefix_sharpe = prefix_mean / (instance.l0 + instance.rho * prefix_var)
    return m * (instance.optimal_sharpe - prefix_sharpe)


def pseudo_regret(counts, instance):
    """Sum over arms of Sharpe gap times pull count."""
    counts = np.asarray(getattr(counts, "counts", counts), dtype=float)
    return float(np.dot(gap_summary(instance).delta, counts))


def _count_matrix(counts_across_reps):
    rows = [np.asarray(getattr(c, "counts", c)) for c in counts_across_reps]
    if len(rows) < 2:
        raise InsufficientData(f"Pull-count variance needs at least 2 replications, got {len(rows)}")
    matrix = np.vstack(rows).astype(float)
    horizons = matrix.sum(axis=1)
    if not np.all(horizons == horizons[0]):
        raise InsufficientData("Replications do not share a common horizon")
    return matrix


def pull_count_variance(counts_across_reps, arm):
    """Unbiased cross-replication variance of one arm's pull count."""
    column = _count_matrix(counts_across_reps)[:, arm]
    return float(np.var(column, ddof=1))


def pull_count_variance_stderr(counts_across_reps, arm):
    """Standard error of pull_count_variance, from the sample fourth central moment."""
    column = _count_matrix(counts_across_reps)[:, arm]
    reps = len(column)
    s2 = np.var(column, ddof=1)
    m4 = np.mean((column - column.mean()) ** 4)
    var_of_s2 = (m4 - s2 * s2 * (reps - 3) / (reps - 1)) / reps
    return float(np.sqrt(max(var_of_s2, 0.0)))


def efron_stein_limit(n):
    return n / 2.0


def mixture_sharpe(instance, weights):
    """Sharpe ratio of an i.i.d. stream that plays arm i with probability weights[i]."""
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    means = instance.means
    mean = float(np.dot(w, means))
    variance = float(np.dot(w, instance.variances + means ** 2)) - mean ** 2
    return sharpe_ratio(mean, variance, instance.rho, instance.l0)
