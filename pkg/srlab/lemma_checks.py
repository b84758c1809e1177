"""
Numerical verification of the tail-bound lemmas, the h(x) machinery and the
Efron-Stein pull-count variance limit.

Each check evaluates a bound on a fixed parameter grid against a SciPy oracle
and records the worst margin (bound side minus oracle side; negative means a
violation). Advisory checks are reported but never fail the run.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.special import gammainc, gammaincc, ndtr

from .bandit_env import PAPER_MEANS, PAPER_VARIANCES, RngStream, make_instance
from .experiment_runner import simulate
from .policies import PolicyConfig
from .sr_metrics import efron_stein_limit, pull_count_variance, pull_count_variance_stderr
from .theory_bounds import (
    gamma_left_tail_bound,
    gamma_left_tail_chernoff,
    gamma_mills_bounds,
    gamma_mills_ratio,
    gaussian_left_tail_bound,
    gaussian_two_sided_tail,
    h,
    h_minus_inv,
    h_plus_inv,
)

LEMMA_NAMES = (
    "gaussian_left_tail",
    "gamma_left_tail",
    "gamma_left_tail_closed_form",
    "gaussian_two_sided",
    "gamma_mills",
    "gamma_mills_tightness",
    "h_inverse_roundtrip",
    "h_convexity",
    "efron_stein",
)

RELATIVE_TOL = 1e-9
ROUNDTRIP_TOL = 1e-10
MILLS_TIGHTNESS_LIMIT = 1.1
ES_INSTANCES = (
    ((0.5, 0.1), (0.3, 0.2)),
    tuple(zip(PAPER_MEANS, PAPER_VARIANCES)),
)
ES_HORIZON = 1000
ES_REPS = 200
ES_POLICIES = ("round-robin", "uniform", "srts")


@dataclass
class LemmaResult:
    name: str
    passed: bool
    worst_margin: float
    points: int
    gating: bool = True
    detail: str = ""


@dataclass
class LemmaReport:
    results: List[LemmaResult] = field(default_factory=list)

    @property
    def passed(self):
        return all(r.passed for r in self.results if r.gating)

    def failures(self):
        return [r.name for r in self.results if r.gating and not r.passed]

    def format_table(self):
        lines = [f"{'lemma':<30} {'status':<9} {'worst margin':>14} {'points':>7}"]
        for r in self.results:
            status = "PASS" if r.passed else ("FAIL" if r.gating else "ADVISORY")
            lines.append(f"{r.name:<30} {status:<9} {r.worst_margin:>14.6g} {r.points:>7}"
                         + (f"  {r.detail}" if r.detail else ""))
        return "\n".join(lines)


class LemmaChecker:
    """
    Runs every check. `corrupt` names one lemma whose bound side is negated
    before comparison, so the harness can prove it notices a broken bound.
    """

    def __init__(self, seed=20240601, corrupt=None, es_horizon=ES_HORIZON, es_reps=ES_REPS, es_policies=ES_POLICIES,
                 es_instances=ES_INSTANCES):
        if corrupt is not None and corrupt not in LEMMA_NAMES:
            raise ValueError(f"Unknown lemma to corrupt: {corrupt}")
        self.seed = seed
        self.corrupt = corrupt
        self.es_horizon = es_horizon
        self.es_reps = es_reps
        self.es_policies = es_policies
        self.es_instances = es_instances
        self.logger = logging.getLogger("LemmaChecker")

    def _sign(self, name):
        return -1.0 if name == self.corrupt else 1.0

    def _result(self, name, margins, tol=0.0, gating=True, detail=""):
        margins = np.asarray(margins, dtype=float)
        worst = float(np.min(margins))
        passed = bool(worst >= -tol)
        return LemmaResult(name, passed, worst, int(margins.size), gating, detail)

    def check_gaussian_left_tail(self):
        s = self._sign("gaussian_left_tail")
        margins = []
        for mu, q, gap in itertools.product((-1.0, 0.0, 0.5, 2.0), (0.25, 1.0, 4.0, 16.0, 100.0),
                                            (0.01, 0.1, 0.5, 1.0, 3.0)):
            a = mu - gap
            bound = s * gaussian_left_tail_bound(mu, q, a)
            truth = ndtr((a - mu) * math.sqrt(q))
            margins.append(bound - truth)
        return self._result("gaussian_left_tail", margins)

    def _gamma_left_grid(self):
        return itertools.product((0.5, 1.0, 2.0, 5.0, 20.0), (0.5, 1.0, 4.0, 10.0), (0.05, 0.2, 0.5, 0.8, 0.99))

    def check_gamma_left_tail(self):
        s = self._sign("gamma_left_tail")
        margins = []
        for shape, rate, frac in self._gamma_left_grid():
            a = frac * shape / rate
            margins.append(s * gamma_left_tail_chernoff(shape, rate, a) - gammainc(shape, rate * a))
        return self._result("gamma_left_tail", margins)

    def check_gamma_left_tail_closed_form(self):
        s = self._sign("gamma_left_tail_closed_form")
        margins = []
        for shape, rate, frac in self._gamma_left_grid():
            a = frac * shape / rate
            margins.append(s * gamma_left_tail_bound(shape, 1.0 / rate, a) - gammainc(shape, rate * a))
        violations = int(np.sum(np.asarray(margins) < 0))
        return self._result("gamma_left_tail_closed_form", margins, gating=False,
                            detail=f"{violations} grid points above the closed form")

    def check_gaussian_two_sided(self):
        s = self._sign("gaussian_two_sided")
        margins = []
        for mu, sigma, t in itertools.product((-1.0, 0.0, 2.0, 5.0), (0.1, 1.0, 3.0, 10.0, 50.0),
                                              (0.01, 0.5, 1.0, 2.0, 5.0)):
            x = mu + t * sigma
            lower, upper = gaussian_two_sided_tail(mu, sigma, x)
            truth = ndtr(-(x - mu) / sigma)
            margins.append(min(truth / lower - 1.0, s * upper / truth - 1.0))
        return self._result("gaussian_two_sided", margins, tol=RELATIVE_TOL)

    def check_gamma_mills(self):
        s = self._sign("gamma_mills")
        margins = []
        for shape, rate, d in itertools.product((1.0001, 1.5, 2.0, 5.0, 20.0), (0.5, 1.0, 3.0, 10.0),
                                                (0.1, 0.5, 1.0, 3.0, 6.0)):
            x = (shape - 1) / rate + d * math.sqrt(shape) / rate
            lower, upper = gamma_mills_bounds(shape, rate, x)
            truth = gammaincc(shape, rate * x)
            margins.append(min(truth / lower - 1.0, s * upper / truth - 1.0))
        return self._result("gamma_mills", margins, tol=RELATIVE_TOL)

    def check_gamma_mills_tightness(self):
        """upper/lower at 5 standard deviations above the mean stays below 1.1 for shapes near 1."""
        limit = self._sign("gamma_mills_tightness") * MILLS_TIGHTNESS_LIMIT
        margins = []
        for shape, rate in itertools.product((1.1, 1.25, 1.5), (0.5, 1.0, 2.0)):
            x = shape / rate + 5.0 * math.sqrt(shape) / rate
            margins.append(limit - gamma_mills_ratio(shape, rate, x))
            margins.append(limit - gamma_mills_ratio(shape, rate, 1e6 / rate))
        return self._result("gamma_mills_tightness", margins)

    def check_h_inverse_roundtrip(self):
        tol = self._sign("h_inverse_roundtrip") * ROUNDTRIP_TOL
        ys = np.concatenate([[0.01, 0.1, 1.0, 10.0], np.logspace(-4, 2, 96)])
        margins = []
        for y in ys:
            plus, minus = h_plus_inv(y), h_minus_inv(y)
            error = max(abs(h(plus) - y), abs(h(minus) - y))
            ordered = plus >= 1.0 >= minus
            margins.append(tol - error if ordered else -1.0)
        return self._result("h_inverse_roundtrip", margins)

    def check_h_convexity(self):
        s = self._sign("h_convexity")
        rng = np.random.default_rng(self.seed)
        a = np.exp(rng.uniform(math.log(0.01), math.log(50.0), 100))
        b = np.exp(rng.uniform(math.log(0.01), math.log(50.0), 100))
        mid = h((a + b) / 2.0)
        chord = (h(a) + h(b)) / 2.0
        margins = s * chord - mid
        return self._result("h_convexity", margins, tol=1e-12)

    def check_efron_stein(self):
        limit = self._sign("efron_stein") * efron_stein_limit(self.es_horizon)
        margins = []
        for arms in self.es_instances:
            instance = make_instance(arms)
            for kind in self.es_policies:
                config = PolicyConfig(kind=kind)
                counts = []
                for r in range(self.es_reps):
                    trace = simulate(instance, config, self.es_horizon, RngStream(self.seed, r))
                    counts.append(np.bincount(trace.choices, minlength=instance.k))
                for arm in range(instance.k):
                    var = pull_count_variance(counts, arm)
                    slack = 3.0 * pull_count_variance_stderr(counts, arm)
                    margins.append(limit + slack - var)
        arm_counts = "/".join(str(len(arms)) for arms in self.es_instances)
        return self._result("efron_stein", margins,
                            detail=f"K={arm_counts}, n={self.es_horizon}, reps={self.es_reps}")

    def run(self):
        self.logger.info("🚀 Verifying lemmas...")
        report = LemmaReport()
        for name in LEMMA_NAMES:
            result = getattr(self, f"check_{name}")()
            report.results.append(result)
            if result.passed:
                self.logger.info(f"✅ {name}: worst margin {result.worst_margin:.3g}")
            elif result.gating:
                self.logger.error(f"❌ {name}: violated, worst margin {result.worst_margin:.3g}")
            else:
                self.logger.warning(f"⚠️ {name} (advisory): worst margin {result.worst_margin:.3g} {result.detail}")
        return report


def verify_lemmas(seed=20240601, corrupt: Optional[str] = None, **kwargs):
    return LemmaChecker(seed=seed, corrupt=corrupt, **kwargs).run()
