import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List

import numpy as np

from . import __version__
from .bandit_env import RngStream, sample_reward
from .errors import InsufficientData, SharpeLabError
from .policies import policy_init
from .sr_metrics import RunTrace, pseudo_regret, pull_count_variance, realized_regret
from .theory_bounds import default_eps_rule, theorem2_regret_curve, theorem3_lower_bound_curve

MAX_EMITTED_POINTS = 2000


@dataclass
class PolicyCurve:
    """Aggregated outcome of one policy at one rho. Regret arrays cover rounds 1..n."""
    policy: str
    rho: float
    regret_mean: np.ndarray
    regret_stderr: np.ndarray
    pulls_mean: np.ndarray
    pulls_var: np.ndarray
    pseudo_regret_mean: float

    @property
    def final_regret(self):
        return float(self.regret_mean[-1])

    @property
    def final_stderr(self):
        return float(self.regret_stderr[-1])


@dataclass
class BoundCurves:
    rho: float
    n_grid: np.ndarray
    upper_bound: np.ndarray
    lower_bound: np.ndarray


@dataclass
class ExperimentResult:
    rho: float
    horizon: int
    replications: int
    grid: np.ndarray
    curves: List[PolicyCurve]
    bounds: BoundCurves
    seed: int
    config_hash: str
    build_id: str = __version__


@dataclass
class SweepRow:
    rho: float
    policy: str
    regret_mean: float
    regret_stderr: float


@dataclass
class SweepResult:
    rows: List[SweepRow]
    results: List[ExperimentResult] = field(default_factory=list)


def emission_grid(n, full=False):
    """Rounds kept for emission: every ceil(n/2000)-th round plus round n."""
    if full:
        return np.arange(1, n + 1)
    step = math.ceil(n / MAX_EMITTED_POINTS)
    grid = np.arange(step, n + 1, step)
    if grid.size == 0 or grid[-1] != n:
        grid = np.append(grid, n)
    return grid


def simulate(instance, policy_config, horizon, rng):
    """One replication: the full trace of a fresh policy over `horizon` rounds."""
    policy = policy_init(policy_config, instance.k, instance.rho, instance.l0)
    choices = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon)
    for t in range(horizon):
        arm = policy.select(rng)
        reward = sample_reward(instance, arm, rng)
        policy.update(arm, reward)
        choices[t] = arm
        rewards[t] = reward
    return RunTrace(choices, rewards)


def _run_replication(task):
    instance, policy_config, horizon, seed, stream_id = task
    trace = simulate(instance, policy_config, horizon, RngStream(seed, stream_id))
    counts = np.bincount(trace.choices, minlength=instance.k)
    return realized_regret(trace, instance), counts


class ExperimentRunner:
    """
    Runs replicated experiments for one ExperimentConfig. Replications go to a
    process pool when jobs > 1; results are always folded in replication-index
    order, so the output does not depend on jobs.
    """

    def __init__(self, config, jobs=1):
        self.config = config
        self.jobs = jobs if jobs and jobs > 0 else (os.cpu_count() or 1)
        self.logger = logging.getLogger("ExperimentRunner")
        self.config_hash = config.config_hash()
        self.grid = emission_grid(config.horizon, config.full_resolution)

    def _map(self, tasks):
        if self.jobs == 1:
            yield from map(_run_replication, tasks)
            return
        chunksize = max(1, len(tasks) // (self.jobs * 4))
        executor = ProcessPoolExecutor(max_workers=self.jobs)
        try:
            yield from executor.map(_run_replication, tasks, chunksize=chunksize)
        finally:
            executor.shutdown()

    def _run_policy(self, instance, policy_config, rho_index):
        reps = self.config.replications
        horizon = self.config.horizon
        first_stream = rho_index * reps
        tasks = [(instance, policy_config, horizon, self.config.base_seed, first_stream + r) for r in range(reps)]

        # Welford over replications, per round
        mean = np.zeros(horizon)
        m2 = np.zeros(horizon)
        counts = []
        for r, (regret, pulls) in enumerate(self._map(tasks), start=1):
            delta = regret - mean
            mean += delta / r
            m2 += delta * (regret - mean)
            counts.append(pulls)

        if reps > 1:
            stderr = np.sqrt(m2 / (reps - 1)) / math.sqrt(reps)
        else:
            stderr = np.zeros(horizon)

        pulls_var = np.full(instance.k, np.nan)
        try:
            pulls_var = np.array([pull_count_variance(counts, arm) for arm in range(instance.k)])
        except InsufficientData:
            self.logger.debug("Pull-count variance left as NaN (fewer than 2 replications)")

        return PolicyCurve(
            policy=policy_config.display_label(),
            rho=instance.rho if policy_config.rho is None else policy_config.rho,
            regret_mean=mean,
            regret_stderr=stderr,
            pulls_mean=np.mean(np.vstack(counts), axis=0),
            pulls_var=pulls_var,
            pseudo_regret_mean=float(np.mean([pseudo_regret(c, instance) for c in counts])),
        )

    def bound_curves(self, instance):
        """Theorem 2 upper and Theorem 3 lower curves on the emission grid (NaN below n=2)."""
        grid = self.grid
        upper = np.full(grid.shape, np.nan)
        lower = np.full(grid.shape, np.nan)
        valid = grid >= 2
        if np.any(valid):
            try:
                eps_rule = default_eps_rule(self.config.eps_exponent)
                upper[valid] = theorem2_regret_curve(instance, grid[valid], self.config.constants, eps_rule)
                lower[valid] = theorem3_lower_bound_curve(instance, grid[valid], self.config.constants)
            except SharpeLabError as e:
                self.logger.warning(f"⚠️ Bound curves unavailable at rho={instance.rho}: {e}")
        return BoundCurves(instance.rho, grid, upper, lower)

    def run(self, rho=None, rho_index=0):
        instance = self.config.build_instance(rho)
        self.logger.info(
            f"🚀 Experiment at rho={instance.rho:g}: K={instance.k}, n={self.config.horizon}, "
            f"reps={self.config.replications}, policies={len(self.config.policies)}, jobs={self.jobs}"
        )
        curves = []
        for policy_config in self.config.policies:
            try:
                curve = self._run_policy(instance, policy_config, rho_index)
            except Exception as e:
                self.logger.error(f"❌ Policy {policy_config.display_label()} failed at rho={instance.rho:g}: {e}")
                raise
            self.logger.info(
                f"📊 {curve.policy} rho={instance.rho:g}: final regret {curve.final_regret:.4f} "
                f"± {curve.final_stderr:.4f}, pseudo-regret {curve.pseudo_regret_mean:.4f}"
            )
            curves.append(curve)

        return ExperimentResult(
            rho=instance.rho,
            horizon=self.config.horizon,
            replications=self.config.replications,
            grid=self.grid,
            curves=curves,
            bounds=self.bound_curves(instance),
            seed=self.config.base_seed,
            config_hash=self.config_hash,
        )

    def sweep(self):
        rows, results = [], []
        for rho_index, rho in enumerate(self.config.rho_values()):
            result = self.run(rho, rho_index)
            results.append(result)
            rows.extend(SweepRow(rho, c.policy, c.final_regret, c.final_stderr) for c in result.curves)
        self.logger.info(f"✅ Sweep finished over {len(results)} rho values")
        return SweepResult(rows, results)

    def bounds(self):
        return [self.bound_curves(self.config.build_instance(rho)) for rho in self.config.rho_values()]


def run_experiment(config, jobs=1):
    return ExperimentRunner(config, jobs).run()


def sweep_rho(config, jobs=1):
    return ExperimentRunner(config, jobs).sweep()
