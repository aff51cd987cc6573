"""Primal-dual arm selection with an unprojected dual price.

A Lagrangian rule picks arms from optimistic reward and pessimistic cost
estimates while the dual price moves by the raw additive calibration update.
The dual is never projected; instead, explicit boundary arms absorb it:
when the price is at or above its cap the guaranteed-success arm is forced,
and when it is at or below zero the null arm is forced. A projected-dual
variant (the classical construction) is included as an ablation baseline;
it keeps the price in [0, cap] by clamping after the same increment.

Also houses the grid reductions that turn continuous threshold and interval
selection problems into finite arm sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .control import ControllerState, StepSchedule, aci_update
from .metrics import TraceRecord

BOUNDARY_RULE = "boundary"
PROJECTED_BASELINE = "projected"


class FeedbackError(RuntimeError):
    """The environment returned feedback outside its declared range."""


@dataclass
class ArmStats:
    """Running per-arm statistics: exact averages of every observation."""

    plays: int = 0
    mean_reward: float = 0.0
    mean_cost: float = 0.0

    def record(self, reward: float, cost: float) -> None:
        self.plays += 1
        self.mean_reward += (reward - self.mean_reward) / self.plays
        self.mean_cost += (cost - self.mean_cost) / self.plays


def ucb_bounds(stats: ArmStats, n: int, horizon_T: int, c_max: float) -> tuple[float, float]:
    """Optimistic reward and pessimistic cost estimates for one arm.

    With delta = sqrt(2 ln(n T) / plays), returns
    (mean_reward + delta, mean_cost - c_max * delta). The values are left
    unclipped: the selection rule consumes the raw bounds, and clipping
    would change the argmin ordering.
    """
    if stats.plays < 1:
        raise ValueError("arm has never been played; complete the warm-up pass first")
    if n * horizon_T < 3:
        raise ValueError("n * horizon_T must be at least 3")
    delta = math.sqrt(2.0 * math.log(n * horizon_T) / stats.plays)
    return stats.mean_reward + delta, stats.mean_cost - c_max * delta


@dataclass
class BanditConfig:
    """Static parameters of one primal-dual run.

    ``i_min`` must index an arm with cost 0 and reward 0 always, ``i_max``
    one with cost c_max and reward 1 always (the environment constructors
    enforce this). ``lambda_cap`` defaults to c_max / (1 - phi).
    """

    n: int
    c_max: float
    phi: float
    horizon_T: int
    i_min: int
    i_max: int
    lambda_cap: float | None = None
    mode: str = BOUNDARY_RULE

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one arm")
        if not 0.0 < self.phi < 1.0:
            raise ValueError("phi must lie strictly in (0, 1)")
        if self.c_max <= 0.0:
            raise ValueError("c_max must be positive")
        if self.n * self.horizon_T < 3:
            raise ValueError("n * horizon_T must be at least 3")
        if not (0 <= self.i_min < self.n and 0 <= self.i_max < self.n):
            raise ValueError("boundary arm indices out of range")
        if self.mode not in (BOUNDARY_RULE, PROJECTED_BASELINE):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.lambda_cap is None:
            self.lambda_cap = self.c_max / (1.0 - self.phi)
        if self.lambda_cap <= 0.0:
            raise ValueError("lambda_cap must be positive")


class BanditState:
    """Dual price plus per-arm statistics, stored as flat arrays."""

    def __init__(self, cfg: BanditConfig, schedule: StepSchedule):
        self.dual = ControllerState(value=0.0, phi=cfg.phi, schedule=schedule)
        self.plays = np.zeros(cfg.n, dtype=np.int64)
        self.mean_reward = np.zeros(cfg.n)
        self.mean_cost = np.zeros(cfg.n)
        self.step = 1
        # cached for the selection rule
        self._log_term = 2.0 * math.log(cfg.n * cfg.horizon_T)

    def record(self, arm: int, reward: float, cost: float) -> None:
        self.plays[arm] += 1
        k = self.plays[arm]
        self.mean_reward[arm] += (reward - self.mean_reward[arm]) / k
        self.mean_cost[arm] += (cost - self.mean_cost[arm]) / k

    def arm_stats(self, arm: int) -> ArmStats:
        return ArmStats(
            plays=int(self.plays[arm]),
            mean_reward=float(self.mean_reward[arm]),
            mean_cost=float(self.mean_cost[arm]),
        )

    @property
    def stats(self) -> list[ArmStats]:
        return [self.arm_stats(i) for i in range(self.plays.size)]


def select_arm(state: BanditState, cfg: BanditConfig) -> int:
    """Pick the next arm once every arm has been played at least once.

    Boundary mode: price >= cap forces i_max, price <= 0 forces i_min,
    otherwise the Lagrangian argmin of cost_lcb - price * reward_ucb over
    the raw (unclipped) bounds, ties broken by lowest arm index. The
    projected baseline always plays the argmin and relies on the
    post-update projection instead; as in the projected-dual algorithms it
    stands in for, its argmin caps the optimistic reward at 1 so a
    never-played arm cannot look better than a guaranteed success.
    """
    if np.any(state.plays == 0):
        raise ValueError("warm-up pass incomplete: some arm has never been played")
    lam = state.dual.value
    delta = np.sqrt(state._log_term / state.plays)
    reward_ucb = state.mean_reward + delta
    if cfg.mode == BOUNDARY_RULE:
        if lam >= cfg.lambda_cap:
            return cfg.i_max
        if lam <= 0.0:
            return cfg.i_min
    else:
        reward_ucb = np.minimum(reward_ucb, 1.0)
    scores = (state.mean_cost - cfg.c_max * delta) - lam * reward_ucb
    return int(np.argmin(scores))


def bandit_step(state: BanditState, cfg: BanditConfig, env) -> TraceRecord:
    """Play one step: warm-up plays arms 0..n-1 in index order, then the
    selection rule takes over. The played arm's statistics are updated on
    every play (boundary arms included); the dual moves only once the
    warm-up pass is over, so it starts the controlled phase at exactly its
    initial value and stays inside its band for any step size.
    """
    t = state.step
    lam = state.dual.value
    if t <= cfg.n:
        arm = t - 1
        boundary = False
    else:
        arm = select_arm(state, cfg)
        boundary = cfg.mode == BOUNDARY_RULE and (lam >= cfg.lambda_cap or lam <= 0.0)
    reward, cost = env.pull(t, arm)
    if not -1e-9 <= cost <= cfg.c_max + 1e-9:
        raise FeedbackError(
            f"arm {arm} returned cost {cost} outside [0, {cfg.c_max}] at step {t}"
        )
    state.record(arm, reward, cost)
    if t > cfg.n:
        aci_update(state.dual, reward)
        if cfg.mode == PROJECTED_BASELINE:
            state.dual.value = min(max(state.dual.value, 0.0), cfg.lambda_cap)
    state.step += 1
    return TraceRecord(
        t=t,
        action=int(arm),
        reward=float(reward),
        cost=float(cost),
        state=lam,
        extras={"boundary": 1.0 if boundary else 0.0},
    )


def discretize_threshold(tau_min: float, tau_max: float, delta: float) -> list[float]:
    """Grid {tau_min, tau_min + delta, ...} with the last point forced to
    tau_max. Each grid point is one arm."""
    if tau_max <= tau_min:
        raise ValueError("tau_max must exceed tau_min")
    if not 0.0 < delta <= tau_max - tau_min:
        raise ValueError("delta must lie in (0, tau_max - tau_min]")
    steps = int(math.floor((tau_max - tau_min) / delta + 1e-9))
    grid = [tau_min + k * delta for k in range(steps + 1)]
    if abs(grid[-1] - tau_max) <= 1e-9 * max(1.0, abs(tau_max)):
        grid[-1] = tau_max
    else:
        grid.append(tau_max)
    return grid


@dataclass(frozen=True)
class IntervalArm:
    """A closed sub-interval of [0, 1]; cost equals its length.

    The empty arm (reward 0, cost 0) carries ``empty=True``.
    """

    lo: float
    hi: float
    empty: bool = False

    @property
    def length(self) -> float:
        return 0.0 if self.empty else self.hi - self.lo

    def contains(self, y: float) -> bool:
        return (not self.empty) and self.lo <= y <= self.hi

    def label(self) -> str:
        return "empty" if self.empty else f"[{self.lo:g},{self.hi:g}]"


@dataclass(frozen=True)
class IntervalGrid:
    """All grid intervals [i*delta, j*delta] with 0 <= i < j <= m, plus an
    empty arm at index 0. The empty arm is the null arm; the full interval
    [0, 1] (index ``cells``) is the guaranteed arm."""

    delta: float
    cells: int
    arms: tuple[IntervalArm, ...]

    @property
    def i_min(self) -> int:
        return 0

    @property
    def i_max(self) -> int:
        return self.cells

    @property
    def c_max(self) -> float:
        return self.arms[self.i_max].length


def discretize_intervals(delta: float) -> IntervalGrid:
    """Build the interval arm grid for a mesh width that divides 1.

    Arm count is m(m+1)/2 + 1 where m = 1/delta.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    m = round(1.0 / delta)
    if m < 1 or abs(m * delta - 1.0) > 1e-12:
        raise ValueError(f"delta={delta} does not divide 1")
    arms = [IntervalArm(0.0, 0.0, empty=True)]
    for i in range(m):
        for j in range(i + 1, m + 1):
            arms.append(IntervalArm(i * delta, j * delta))
    return IntervalGrid(delta=delta, cells=m, arms=tuple(arms))
