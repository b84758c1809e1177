"""
Gaussian bandit instances, seeded reward streams and the reference 10-arm instance.

Random numbers come from NumPy's PCG64 bit generator. Every replication owns one
RngStream built from (seed, stream_id) through SeedSequence spawning, which gives
statistically independent streams without sharing state between workers. Each
stream is split into four sub-streams so that the order in which a policy
consumes its draws never shifts the reward sequence:

    rewards  - arm rewards, one Normal draw per pull
    theta    - Thompson mean samples (SRTS and mean-TS)
    tau      - Thompson precision samples (SRTS only)
    policy   - any other randomized policy decision

Normal variates use NumPy's ziggurat sampler, which is exact. Reproducibility is
guaranteed for a fixed NumPy version, not across implementations.
"""
import logging
import math
import operator
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInstance, TiedOptimum
from .sr_metrics import sharpe_ratio

logger = logging.getLogger("BanditEnv")

PAPER_MEANS = (0.10, 0.27, 0.34, 0.41, 0.43, 0.55, 0.56, 0.67, 0.71, 0.79)
PAPER_VARIANCES = (0.05, 0.09, 0.19, 0.14, 0.44, 0.24, 0.36, 0.56, 0.49, 0.85)

# Relative tolerance under which two Sharpe ratios count as tied.
TIE_RTOL = 1e-12

_SUBSTREAMS = ("rewards", "theta", "tau", "policy")


@dataclass(frozen=True)
class ArmParams:
    mean: float
    variance: float

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.variance)):
            raise InvalidInstance(f"Arm parameters must be finite, got mean={self.mean}, variance={self.variance}")
        if self.variance <= 0:
            raise InvalidInstance(f"Arm variance must be positive, got {self.variance}")

    @property
    def std(self):
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class BanditInstance:
    arms: tuple
    rho: float = 1.0
    l0: float = 1.0
    sharpe: tuple = field(init=False, repr=False)
    optimal_arm: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        if len(self.arms) < 2:
            raise InvalidInstance(f"A bandit instance needs K >= 2 arms, got K={len(self.arms)}")
        if not (math.isfinite(self.rho) and self.rho >= 0):
            raise InvalidInstance(f"Risk tolerance rho must be >= 0, got {self.rho}")
        if not (0 < self.l0 <= 1):
            raise InvalidInstance(f"Regularizer l0 must lie in (0, 1], got {self.l0}")

        sharpe = tuple(sharpe_ratio(a.mean, a.variance, self.rho, self.l0) for a in self.arms)
        best = max(sharpe)
        tol = TIE_RTOL * max(1.0, abs(best))
        tied = [i for i, s in enumerate(sharpe) if abs(s - best) <= tol]
        if len(tied) > 1:
            raise TiedOptimum(tied, best)

        object.__setattr__(self, "sharpe", sharpe)
        object.__setattr__(self, "optimal_arm", tied[0])

    @property
    def k(self):
        return len(self.arms)

    @property
    def means(self):
        return np.array([a.mean for a in self.arms])

    @property
    def variances(self):
        return np.array([a.variance for a in self.arms])

    @property
    def optimal_sharpe(self):
        return self.sharpe[self.optimal_arm]

    def with_rho(self, rho):
        return BanditInstance(self.arms, rho=rho, l0=self.l0)

    def with_means(self, mean):
        """Same variances, every arm mean replaced by `mean`."""
        return BanditInstance(tuple(ArmParams(mean, a.variance) for a in self.arms), rho=self.rho, l0=self.l0)


class RngStream:
    """Single-owner random state for one replication."""

    def __init__(self, seed, stream_id):
        if seed < 0 or stream_id < 0:
            raise ValueError(f"seed and stream_id must be unsigned, got seed={seed}, stream_id={stream_id}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        root = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        for name, child in zip(_SUBSTREAMS, root.spawn(len(_SUBSTREAMS))):
            setattr(self, name, np.random.Generator(np.random.PCG64(child)))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def make_instance(arms, rho=1.0, l0=1.0):
    """Build a validated instance from (mean, variance) pairs."""
    parsed = []
    for i, arm in enumerate(arms):
        if isinstance(arm, ArmParams):
            parsed.append(arm)
            continue
        try:
            mean, variance = arm
        except (TypeError, ValueError):
            raise InvalidInstance(f"Arm {i} must be a (mean, variance) pair, got {arm!r}")
        parsed.append(ArmParams(float(mean), float(variance)))
    instance = BanditInstance(tuple(parsed), rho=float(rho), l0=float(l0))
    logger.debug(f"Instance built: K={instance.k}, rho={instance.rho}, l0={instance.l0}, optimal arm={instance.optimal_arm}")
    return instance


def paper_instance(rho=1.0, l0=1.0, mean_override=None):
    """
    The 10-arm reference instance. Passing mean_override=1.0 gives the
    equal-means (variance minimization) variant.
    """
    means = PAPER_MEANS if mean_override is None else (float(mean_override),) * len(PAPER_MEANS)
    return make_instance(zip(means, PAPER_VARIANCES), rho=rho, l0=l0)


def sample_reward(instance, arm, rng):
    arm = operator.index(arm)
    if not 0 <= arm < instance.k:
        raise IndexError(f"Arm {arm} out of range for K={instance.k}")
    params = instance.arms[arm]
    return float(rng.rewards.normal(params.mean, params.std))
