import math

import numpy as np
import pytest

from coverctl.bandit import (
    BOUNDARY_RULE,
    PROJECTED_BASELINE,
    ArmStats,
    BanditConfig,
    BanditState,
    FeedbackError,
    bandit_step,
    discretize_intervals,
    discretize_threshold,
    select_arm,
    ucb_bounds,
)
from coverctl.control import StepSchedule, ValidityLedger, telescoping_check
from coverctl.environments import TrapWorld


def test_ucb_bounds_reference_value():
    # delta = sqrt(2 ln 16 / 4), evaluated independently
    stats = ArmStats(plays=4, mean_reward=0.5, mean_cost=0.3)
    r_ucb, c_lcb = ucb_bounds(stats, n=2, horizon_T=8, c_max=1.0)
    delta = math.sqrt(2.0 * math.log(16.0) / 4.0)
    assert delta == pytest.approx(1.1774100225154747, abs=1e-12)
    assert r_ucb == pytest.approx(0.5 + delta, abs=1e-12)
    assert c_lcb == pytest.approx(0.3 - delta, abs=1e-12)


def test_ucb_bounds_vanishing_width():
    stats = ArmStats(plays=10**12, mean_reward=1.0, mean_cost=0.7)
    r_ucb, c_lcb = ucb_bounds(stats, n=2, horizon_T=10, c_max=0.7)
    assert r_ucb == pytest.approx(1.0, abs=1e-5)
    assert c_lcb == pytest.approx(0.7, abs=1e-5)


def test_ucb_bounds_single_arm_small_horizon():
    stats = ArmStats(plays=1, mean_reward=0.0, mean_cost=0.0)
    r_ucb, c_lcb = ucb_bounds(stats, n=1, horizon_T=3, c_max=2.0)
    width = math.sqrt(2.0 * math.log(3.0))
    assert width == pytest.approx(1.4823038073675112, abs=1e-12)
    assert r_ucb == pytest.approx(width, abs=1e-12)
    assert c_lcb == pytest.approx(-2.0 * width, abs=1e-12)


def test_ucb_bounds_requires_plays():
    with pytest.raises(ValueError):
        ucb_bounds(ArmStats(), n=2, horizon_T=10, c_max=1.0)


def _loaded_state(cfg, bounds):
    """State whose (reward_ucb, cost_lcb) are approximately ``bounds``."""
    state = BanditState(cfg, StepSchedule.constant(0.1))
    state.plays[:] = 10**12  # confidence width ~ 1e-5
    for i, (r_ucb, c_lcb) in enumerate(bounds):
        state.mean_reward[i] = r_ucb
        state.mean_cost[i] = c_lcb
    return state


def test_select_boundary_forcing():
    cfg = BanditConfig(n=4, c_max=1.0, phi=0.5, horizon_T=100, i_min=3, i_max=0)
    state = _loaded_state(cfg, [(1, 1), (0.9, 0.1), (0.9, 0.2), (0, 0)])
    state.dual.value = cfg.lambda_cap  # 2.0
    assert select_arm(state, cfg) == 0
    state.dual.value = -0.001
    assert select_arm(state, cfg) == 3
    state.dual.value = 0.0
    assert select_arm(state, cfg) == 3


def test_select_lagrangian_argmin_first_on_tie():
    cfg = BanditConfig(n=2, c_max=1.0, phi=0.5, horizon_T=100, i_min=0, i_max=1,
                      lambda_cap=5.0)
    state = _loaded_state(cfg, [(0.9, 0.5), (0.3, 0.2)])
    state.dual.value = 1.0
    # scores ~ (0.5 - 0.9) = -0.4 vs (0.2 - 0.3) = -0.1
    assert select_arm(state, cfg) == 0


def test_select_projected_ignores_boundaries():
    cfg = BanditConfig(n=3, c_max=1.0, phi=0.5, horizon_T=100, i_min=2, i_max=0,
                      mode=PROJECTED_BASELINE)
    state = _loaded_state(cfg, [(1.0, 1.0), (0.9, 0.05), (0.0, 0.0)])
    state.dual.value = 0.0
    # at zero price the argmin is the cheapest arm, not the forced null arm
    assert select_arm(state, cfg) == 2
    state.dual.value = cfg.lambda_cap
    assert select_arm(state, cfg) in (0, 1)  # argmin, never a forced branch


def test_select_requires_warm_up():
    cfg = BanditConfig(n=2, c_max=1.0, phi=0.5, horizon_T=100, i_min=0, i_max=1)
    state = BanditState(cfg, StepSchedule.constant(0.1))
    with pytest.raises(ValueError):
        select_arm(state, cfg)


class _ConstantWorld:
    """Deterministic arm table for driver tests."""

    def __init__(self, table):
        self.table = table

    def pull(self, t, arm):
        return self.table[arm]


def test_bandit_step_warm_up_order_and_frozen_dual():
    cfg = BanditConfig(n=3, c_max=1.0, phi=0.8, horizon_T=10, i_min=2, i_max=0)
    env = _ConstantWorld({0: (1.0, 1.0), 1: (0.0, 0.4), 2: (0.0, 0.0)})
    state = BanditState(cfg, StepSchedule.constant(0.1))
    arms = [bandit_step(state, cfg, env).action for _ in range(3)]
    assert arms == [0, 1, 2]
    assert np.all(state.plays == 1)
    # the dual sits still until the warm-up pass completes
    assert state.dual.value == 0.0
    bandit_step(state, cfg, env)
    assert state.dual.value != 0.0


def test_bandit_step_failure_raises_dual():
    cfg = BanditConfig(n=2, c_max=1.0, phi=0.8, horizon_T=10, i_min=0, i_max=1)
    env = _ConstantWorld({0: (0.0, 0.0), 1: (1.0, 1.0)})
    state = BanditState(cfg, StepSchedule.constant(0.1))
    bandit_step(state, cfg, env)
    bandit_step(state, cfg, env)
    before = 0.5
    state.dual.value = before
    rec = bandit_step(state, cfg, env)
    if rec.reward == 0.0:
        assert state.dual.value == pytest.approx(before + 0.1 * 0.8, abs=1e-12)


def test_bandit_step_rejects_cost_out_of_range():
    cfg = BanditConfig(n=2, c_max=1.0, phi=0.5, horizon_T=10, i_min=0, i_max=1)
    env = _ConstantWorld({0: (0.0, 5.0), 1: (1.0, 1.0)})
    state = BanditState(cfg, StepSchedule.constant(0.1))
    with pytest.raises(FeedbackError):
        bandit_step(state, cfg, env)


def test_projected_mode_clamps_dual():
    cfg = BanditConfig(n=2, c_max=1.0, phi=0.8, horizon_T=10, i_min=0, i_max=1,
                      lambda_cap=0.05, mode=PROJECTED_BASELINE)
    env = _ConstantWorld({0: (0.0, 0.0), 1: (1.0, 1.0)})
    state = BanditState(cfg, StepSchedule.constant(0.1))
    for _ in range(6):
        bandit_step(state, cfg, env)
        assert 0.0 <= state.dual.value <= 0.05


def test_deterministic_replay_matches():
    def run():
        cfg = BanditConfig(n=3, c_max=1.0, phi=0.5, horizon_T=10, i_min=2, i_max=0)
        env = TrapWorld((4, 8), seed=0)
        state = BanditState(cfg, StepSchedule.constant(0.2))
        return [(r.t, r.action, r.reward, r.cost, r.state)
                for r in (bandit_step(state, cfg, env) for _ in range(10))]

    assert run() == run()


def test_boundary_plays_update_stats():
    cfg = BanditConfig(n=3, c_max=1.0, phi=0.8, horizon_T=50, i_min=2, i_max=0)
    env = _ConstantWorld({0: (1.0, 1.0), 1: (0.0, 0.4), 2: (0.0, 0.0)})
    state = BanditState(cfg, StepSchedule.constant(0.5))
    for _ in range(20):
        bandit_step(state, cfg, env)
    assert state.plays.sum() == 20
    assert state.arm_stats(0).mean_reward == 1.0


def test_coverage_identity_on_trap_run():
    cfg = BanditConfig(n=3, c_max=1.0, phi=0.5, horizon_T=5000, i_min=2, i_max=0)
    env = TrapWorld((2000, 3200), seed=0)
    state = BanditState(cfg, StepSchedule.constant(0.02))
    # the ledger window starts once the warm-up pass (and with it the
    # controlled dual) begins
    ledger = ValidityLedger(0.5, state.dual.schedule, window_start=cfg.n + 1)
    eta_max = 0.02
    for _ in range(5000):
        rec = bandit_step(state, cfg, env)
        if rec.t > cfg.n:
            ledger.record(rec.reward)
            assert -eta_max - 1e-12 <= rec.state <= cfg.lambda_cap + eta_max + 1e-12
    assert abs(telescoping_check(ledger, 0.0, state.dual.value)) <= 1e-9


def test_ucb_concentration_on_bernoulli_draws():
    # 1000 independent runs of 1000 pulls: the truth should sit inside the
    # confidence band at all but a vanishing share of (run, step) pairs
    rng = np.random.default_rng(2024)
    runs, horizon, n_arms = 1000, 1000, 2
    width_scale = math.sqrt(2.0 * math.log(n_arms * horizon))
    violations = 0
    for p in (0.3, 0.7):
        draws = rng.random((runs, horizon)) < p
        counts = np.arange(1, horizon + 1)
        means = np.cumsum(draws, axis=1) / counts
        delta = width_scale / np.sqrt(counts)
        violations += int(np.sum(np.abs(means - p) > delta))
    assert violations / (runs * horizon * n_arms) < 0.05


def test_discretize_threshold_grids():
    assert discretize_threshold(0.0, 1.0, 0.25) == pytest.approx([0, 0.25, 0.5, 0.75, 1.0])
    assert discretize_threshold(0.0, 1.0, 1.0) == pytest.approx([0.0, 1.0])
    grid = discretize_threshold(0.0, 1.0, 0.3)
    assert grid == pytest.approx([0.0, 0.3, 0.6, 0.9, 1.0])
    assert len(grid) == 5
    with pytest.raises(ValueError):
        discretize_threshold(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        discretize_threshold(1.0, 0.0, 0.1)


def test_discretize_intervals_counts():
    grid = discretize_intervals(0.25)
    assert len(grid.arms) == 11
    assert grid.arms[grid.i_min].empty
    assert grid.arms[grid.i_max].lo == 0.0 and grid.arms[grid.i_max].hi == 1.0
    assert discretize_intervals(1.0).arms[1].length == 1.0
    assert len(discretize_intervals(1.0).arms) == 2
    assert len(discretize_intervals(0.05).arms) == 211
    with pytest.raises(ValueError):
        discretize_intervals(0.3)
    with pytest.raises(ValueError):
        discretize_intervals(0.0)


def test_interval_arm_costs_are_lengths():
    grid = discretize_intervals(0.2)
    for arm in grid.arms:
        if arm.empty:
            assert arm.length == 0.0
        else:
            assert arm.length == pytest.approx(arm.hi - arm.lo)
    assert grid.c_max == pytest.approx(1.0)
