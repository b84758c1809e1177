from unittest.mock import MagicMock

import numpy as np
from pydantic import ValidationError

from harness import acceptance_enabled, run_all

from srlab.bandit_env import RngStream, make_instance, paper_instance
from srlab.errors import InvalidReward, NotWarmedUp
from srlab.experiment_runner import simulate
from srlab.policies import (
    BanditPolicy,
    PolicyConfig,
    SrtsPosterior,
    mean_ts_select,
    mv_lcb_select,
    policy_init,
    sr_ucb_select,
    srts_index,
    srts_select,
    srts_update,
)

KINDS = ("srts", "mean-ts", "sr-ucb", "mv-lcb", "round-robin", "uniform")


def _state(mu_hat, pulls, sum_sq_dev=None):
    k = len(mu_hat)
    state = SrtsPosterior.fresh(k)
    state.mu_hat[:] = mu_hat
    state.pulls[:] = pulls
    state.sum_sq_dev[:] = sum_sq_dev if sum_sq_dev is not None else np.zeros(k)
    state.alpha[:] = 0.5 + state.pulls / 2
    state.beta[:] = 0.5 + state.sum_sq_dev / 2
    return state


def test_srts_initial_state():
    policy = policy_init(PolicyConfig(kind="srts"), 10)
    state = policy.state
    assert np.all(state.mu_hat == 0) and np.all(state.pulls == 0)
    assert np.all(state.alpha == 0.5) and np.all(state.beta == 0.5)


def test_forced_round_for_every_kind():
    for kind in KINDS:
        policy = policy_init(PolicyConfig(kind=kind), 4)
        rng = RngStream(0, 0)
        first = []
        for t in range(4):
            arm = policy.select(rng)
            first.append(arm)
            policy.update(arm, 0.1 * t)
        assert first == [0, 1, 2, 3], f"{kind}: {first}"
        assert np.all(policy.state.pulls >= 1)


def test_round_robin_sequence():
    policy = policy_init(PolicyConfig(kind="round-robin"), 3)
    rng = RngStream(0, 0)
    seq = []
    for _ in range(9):
        arm = policy.select(rng)
        policy.update(arm, 0.0)
        seq.append(arm)
    assert seq == [0, 1, 2, 0, 1, 2, 0, 1, 2]


def test_update_one_point():
    state = SrtsPosterior.fresh(2)
    srts_update(state, 1, 0.7)
    assert state.mu_hat[1] == 0.7 and state.pulls[1] == 1
    assert state.alpha[1] == 1.0 and state.beta[1] == 0.5


def test_update_two_points():
    state = SrtsPosterior.fresh(1)
    srts_update(state, 0, 1.0)
    srts_update(state, 0, 3.0)
    assert state.mu_hat[0] == 2.0
    assert state.sum_sq_dev[0] == 2.0
    assert state.alpha[0] == 1.5 and state.beta[0] == 1.5


def test_update_rejects_bad_input():
    state = SrtsPosterior.fresh(2)
    for reward in (float("nan"), float("inf")):
        try:
            srts_update(state, 0, reward)
            assert False, "non-finite reward must raise"
        except InvalidReward:
            pass
    try:
        srts_update(state, 2, 0.1)
        assert False
    except IndexError:
        pass
    assert state.pulls[0] == 0


def test_posterior_bookkeeping_matches_batch():
    rng = np.random.default_rng(0)
    state = SrtsPosterior.fresh(3)
    history = {0: [], 1: [], 2: []}
    for _ in range(2000):
        arm = int(rng.integers(3))
        x = float(rng.normal(arm, 0.5 + arm))
        srts_update(state, arm, x)
        history[arm].append(x)
    for arm, xs in history.items():
        xs = np.array(xs)
        ssd = np.sum((xs - xs.mean()) ** 2)
        assert abs(state.mu_hat[arm] - xs.mean()) <= 1e-12 * max(1.0, abs(xs.mean()))
        assert state.alpha[arm] == 0.5 + len(xs) / 2
        assert abs(state.beta[arm] - (0.5 + ssd / 2)) <= 1e-12 * (0.5 + ssd / 2)


def test_posterior_variance_consistency():
    rng = np.random.default_rng(1)
    state = SrtsPosterior.fresh(1)
    for x in rng.normal(0.3, np.sqrt(0.6), 10000):
        srts_update(state, 0, x)
    assert abs(state.beta[0] / (state.alpha[0] - 1) - 0.6) < 0.05 * 0.6


def test_select_before_warm_up():
    state = SrtsPosterior.fresh(3)
    srts_update(state, 0, 1.0)
    for call in (lambda: srts_select(state, 1.0, 1.0, RngStream(0, 0)),
                 lambda: mean_ts_select(state, RngStream(0, 0)),
                 lambda: sr_ucb_select(state, 1.0, 1.0, 5, 2.0)):
        try:
            call()
            assert False, "cold arms must raise"
        except NotWarmedUp:
            pass


def test_srts_dominant_arm():
    state = _state([0.0, 10.0, 0.0], [10 ** 6] * 3)
    rng = RngStream(3, 0)
    picks = [srts_select(state, 0.0, 1.0, rng) for _ in range(10000)]
    assert np.mean(np.array(picks) == 1) >= 0.999


def test_srts_tie_breaks_to_lowest_index():
    state = _state([0.3, 0.3], [5, 5], [1.0, 1.0])
    rng = MagicMock()
    rng.tau.gamma.return_value = np.array([2.0, 2.0])
    rng.theta.normal.return_value = np.array([0.3, 0.3])
    assert srts_select(state, 1.0, 1.0, rng) == 0


def test_srts_index_rho_zero_and_scale():
    rng = np.random.default_rng(2)
    theta = rng.normal(size=8)
    tau = rng.gamma(2.0, 1.0, size=8)
    assert np.array_equal(srts_index(theta, tau, 0.0, 1.0), theta)
    for lam in (1e-3, 0.5, 7.0, 1e4):
        assert np.argmax(srts_index(lam * theta, tau, 1.3, 0.4)) == np.argmax(srts_index(theta, tau, 1.3, 0.4))


def test_rho_zero_srts_equals_mean_ts():
    instance = paper_instance(rho=0.0)
    for seed in range(10):
        srts = simulate(instance, PolicyConfig(kind="srts"), 1000, RngStream(seed, 0))
        mean_ts = simulate(instance, PolicyConfig(kind="mean-ts"), 1000, RngStream(seed, 0))
        assert np.array_equal(srts.choices, mean_ts.choices), f"seed {seed}"


def test_sr_ucb_greedy_and_ties():
    # plug-in SRs: 0.5/(1+0.1)=0.4545, 0.6/(1+0.5)=0.4, 0.2/1=0.2
    state = _state([0.5, 0.6, 0.2], [10, 10, 10], [1.0, 5.0, 0.0])
    assert sr_ucb_select(state, 1.0, 1.0, 31, 0.0) == 0
    assert sr_ucb_select(state, 0.0, 1.0, 31, 0.0) == 1
    tied = _state([0.4, 0.4], [7, 7], [0.7, 0.7])
    assert sr_ucb_select(tied, 1.0, 1.0, 15, 2.0) == 0


def test_sr_ucb_bonus_prefers_rarely_pulled():
    state = _state([0.5, 0.45], [1000, 2], [100.0, 0.2])
    assert sr_ucb_select(state, 1.0, 1.0, 1003, 2.0) == 1


def test_mv_lcb_greedy_and_ties():
    # mean - rho*var: 0.5-0.1=0.4, 0.6-0.5=0.1
    state = _state([0.5, 0.6], [10, 10], [1.0, 5.0])
    assert mv_lcb_select(state, 1.0, 1.0, 21, 0.0) == 0
    assert mv_lcb_select(state, 0.0, 1.0, 21, 0.0) == 1
    tied = _state([0.4, 0.4], [7, 7], [0.7, 0.7])
    assert mv_lcb_select(tied, 1.0, 1.0, 15, 2.0) == 0


def test_mean_ts_concentrates_on_single_good_arm():
    instance = make_instance([(1.0, 0.1), (0.0, 0.1), (0.0, 0.1)], rho=0.0)
    trace = simulate(instance, PolicyConfig(kind="mean-ts"), 20000, RngStream(4, 0))
    assert np.mean(trace.choices == 0) >= 0.99


def test_mean_ts_symmetric_arms_split_evenly():
    reps, n = (100, 10000) if acceptance_enabled() else (40, 1000)
    tolerance = 0.05 if acceptance_enabled() else 0.15
    fractions = []
    for r in range(reps):
        rng = RngStream(8, r)
        policy = BanditPolicy(PolicyConfig(kind="mean-ts"), 2, 0.0, 1.0)
        zeros = 0
        for _ in range(n):
            arm = policy.select(rng)
            policy.update(arm, float(rng.rewards.normal(0.5, 0.3)))
            zeros += arm == 0
        fractions.append(zeros / n)
    assert abs(np.mean(fractions) - 0.5) <= tolerance


def test_selections_in_range():
    instance = paper_instance()
    for kind in KINDS:
        trace = simulate(instance, PolicyConfig(kind=kind), 300, RngStream(5, 1))
        assert trace.choices.min() >= 0 and trace.choices.max() < 10
        assert list(trace.choices[:10]) == list(range(10))


def test_policy_config_validation_and_labels():
    assert PolicyConfig(kind="sr-ucb").display_label() == "sr-ucb(c=2)"
    assert PolicyConfig(kind="srts").display_label() == "srts"
    assert PolicyConfig(kind="srts", label="SRTS").display_label() == "SRTS"
    assert PolicyConfig(kind="srts", rho=0.0).display_label() == "srts(rho=0)"
    assert PolicyConfig(kind="sr-ucb", rho=0.5, l0=0.25).display_label() == "sr-ucb(c=2,rho=0.5,l0=0.25)"
    for bad in ({"kind": "ucb1"}, {"kind": "srts", "exploraton": 1.0}, {"kind": "sr-ucb", "exploration": -1}):
        try:
            PolicyConfig(**bad)
            assert False, f"{bad} must be rejected"
        except ValidationError:
            pass


def test_policy_pins_its_own_rho():
    policy = policy_init(PolicyConfig(kind="srts", rho=0.0), 3, rho=5.0, l0=0.5)
    assert policy.rho == 0.0 and policy.l0 == 0.5


if __name__ == "__main__":
    run_all(globals())
