"""
Sequential bandit policies: Sharpe-Ratio Thompson Sampling and the baselines.

Every policy follows the same cycle, driven by BanditPolicy:

    policy = policy_init(config, K, rho, l0)
    arm = policy.select(rng)
    policy.update(arm, reward)

The first K selections are always arms 0..K-1 in order (one forced pull per arm).
Posterior statistics are kept for every kind, since the UCB-style baselines read
the same running means and squared deviations that SRTS samples from.

SRTS posterior, per arm:
    theta ~ Normal(mu_hat, 1 / pulls)        precision equals the pull count
    tau   ~ Gamma(alpha, rate=beta)          alpha = 1/2 + pulls/2
                                             beta  = 1/2 + sum_sq_dev/2
and the played arm is argmax theta / (l0 + rho / tau), lowest index on ties.
"""
import logging
import math
import operator
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import InvalidInstance, InvalidReward, NotWarmedUp

logger = logging.getLogger("Policies")

PolicyKind = Literal["srts", "mean-ts", "sr-ucb", "mv-lcb", "round-robin", "uniform"]

PRIOR_ALPHA = 0.5
PRIOR_BETA = 0.5


class PolicyConfig(BaseModel):
    """
    One policy of an experiment. rho/l0 left unset means the policy uses the
    instance's risk parameters; setting them pins the policy to its own values.
    """
    model_config = ConfigDict(extra="forbid")

    kind: PolicyKind
    rho: Optional[float] = Field(default=None, ge=0)
    l0: Optional[float] = Field(default=None, gt=0, le=1)
    exploration: float = Field(default=2.0, ge=0)
    label: Optional[str] = None

    def display_label(self):
        if self.label:
            return self.label
        knobs = []
        if self.kind in ("sr-ucb", "mv-lcb"):
            knobs.append(f"c={self.exploration:g}")
        if self.rho is not None:
            knobs.append(f"rho={self.rho:g}")
        if self.l0 is not None:
            knobs.append(f"l0={self.l0:g}")
        return f"{self.kind}({','.join(knobs)})" if knobs else self.kind


@dataclass
class SrtsPosterior:
    mu_hat: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    pulls: np.ndarray
    sum_sq_dev: np.ndarray

    @classmethod
    def fresh(cls, k):
        return cls(
            mu_hat=np.zeros(k),
            alpha=np.full(k, PRIOR_ALPHA),
            beta=np.full(k, PRIOR_BETA),
            pulls=np.zeros(k, dtype=np.int64),
            sum_sq_dev=np.zeros(k),
        )

    @property
    def k(self):
        return len(self.pulls)

    def variance_hat(self):
        """Biased per-arm sample variances (0 for unpulled arms)."""
        return np.divide(self.sum_sq_dev, self.pulls, out=np.zeros(self.k), where=self.pulls > 0)

    def require_warm(self):
        cold = np.flatnonzero(self.pulls == 0)
        if cold.size:
            raise NotWarmedUp(f"Arms {cold.tolist()} have not been pulled yet")


def srts_update(state, arm, reward):
    """Fold one observation into the arm's running mean and squared deviations (in place)."""
    arm = operator.index(arm)
    if not 0 <= arm < state.k:
        raise IndexError(f"Arm {arm} out of range for K={state.k}")
    if not math.isfinite(reward):
        raise InvalidReward(f"Reward for arm {arm} is not finite: {reward}")

    state.pulls[arm] += 1
    delta = reward - state.mu_hat[arm]
    state.mu_hat[arm] += delta / state.pulls[arm]
    state.sum_sq_dev[arm] += delta * (reward - state.mu_hat[arm])
    state.alpha[arm] = PRIOR_ALPHA + state.pulls[arm] / 2.0
    state.beta[arm] = PRIOR_BETA + state.sum_sq_dev[arm] / 2.0
    return state


mean_ts_update = srts_update


def srts_index(theta, tau, rho, l0):
    if rho == 0:
        return np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore"):
        return theta / (l0 + rho / tau)


def _draw_theta(state, rng):
    return rng.theta.normal(state.mu_hat, 1.0 / np.sqrt(state.pulls))


def srts_select(state, rho, l0, rng):
    state.require_warm()
    tau = rng.tau.gamma(state.alpha, 1.0 / state.beta)
    theta = _draw_theta(state, rng)
    return int(np.argmax(srts_index(theta, tau, rho, l0)))


def mean_ts_select(state, rng):
    state.require_warm()
    return int(np.argmax(_draw_theta(state, rng)))


def _exploration_bonus(state, t, c):
    return c * np.sqrt(math.log(t) / state.pulls)


def sr_ucb_select(state, rho, l0, t, c):
    """Plug-in Sharpe ratio plus a UCB bonus. Not from the SRTS literature; a labeled baseline."""
    state.require_warm()
    sharpe = state.mu_hat / (l0 + rho * state.variance_hat())
    return int(np.argmax(sharpe + _exploration_bonus(state, t, c)))


def mv_lcb_select(state, rho, l0, t, c):
    """
    Mean-variance LCB: minimizes rho * var - mean minus the bonus, written here as
    argmax of (mean - rho * var) + bonus. l0 is unused by this objective.
    """
    state.require_warm()
    objective = state.mu_hat - rho * state.variance_hat()
    return int(np.argmax(objective + _exploration_bonus(state, t, c)))


class BanditPolicy:
    def __init__(self, config, k, rho, l0):
        self.config = config
        self.kind = config.kind
        self.k = k
        self.rho = rho
        self.l0 = l0
        self.state = SrtsPosterior.fresh(k)
        self.t = 0

    @property
    def label(self):
        return self.config.display_label()

    def select(self, rng):
        t = self.t + 1
        if t <= self.k:
            return t - 1

        if self.kind == "srts":
            return srts_select(self.state, self.rho, self.l0, rng)
        if self.kind == "mean-ts":
            return mean_ts_select(self.state, rng)
        if self.kind == "sr-ucb":
            return sr_ucb_select(self.state, self.rho, self.l0, t, self.config.exploration)
        if self.kind == "mv-lcb":
            return mv_lcb_select(self.state, self.rho, self.l0, t, self.config.exploration)
        if self.kind == "round-robin":
            return (t - 1) % self.k
        if self.kind == "uniform":
            return int(rng.policy.integers(self.k))
        raise ValueError(f"Unknown policy kind: {self.kind}")

    def update(self, arm, reward):
        srts_update(self.state, arm, reward)
        self.t += 1


def policy_init(config, k, rho=1.0, l0=1.0):
    """Fresh policy state. Explicit rho/l0 on the config take precedence over the instance's."""
    if k < 2:
        raise InvalidInstance(f"Policies need K >= 2 arms, got K={k}")
    rho = config.rho if config.rho is not None else rho
    l0 = config.l0 if config.l0 is not None else l0
    logger.debug(f"Policy {config.display_label()} initialised: K={k}, rho={rho}, l0={l0}")
    return BanditPolicy(config, k, rho, l0)
