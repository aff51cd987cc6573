"""Simulated worlds for every controller.

All randomness is counter-based (see :mod:`coverctl.rng`): an observation is
a pure function of (seed, step, action), so replaying a run with the same
seed and action sequence reproduces it exactly, and components never
perturb each other's streams.

Feedback is deliberately minimal. The observation bundle handed to an
algorithm carries exactly a reward and a cost; in particular the interval
world never reveals the arriving point, only the containment bit. Debug
inspection goes through side-channel methods that no controller touches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .bandit import IntervalGrid, discretize_intervals
from .rng import uniform

# component ids for substream separation
_C_REWARD = 1
_C_COST = 2
_C_POINT = 3
_C_SCORE = 4
_C_DEMAND = 5
_C_SETUP = 6
_C_BITS = 7


class Observation(NamedTuple):
    """Everything an algorithm is allowed to see after playing an arm."""

    reward: float
    cost: float


@dataclass(frozen=True)
class ArmSpec:
    """One i.i.d. arm: success probability and a fixed or uniform cost.

    ``cost`` is either a number (fixed) or a (lo, hi) pair sampled uniformly
    per step; the mean cost is then the midpoint.
    """

    p: float
    cost: object

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"success probability {self.p} outside [0, 1]")

    @property
    def mean_cost(self) -> float:
        if isinstance(self.cost, (tuple, list)):
            lo, hi = self.cost
            return 0.5 * (lo + hi)
        return float(self.cost)

    @property
    def max_cost(self) -> float:
        if isinstance(self.cost, (tuple, list)):
            return float(self.cost[1])
        return float(self.cost)


class IidArmWorld:
    """Independent Bernoulli rewards per arm; only the played arm's draw is
    revealed. If the spec list lacks a null arm (p=0, cost 0) or a
    guaranteed arm (p=1, cost c_max) they are appended."""

    def __init__(self, specs, seed: int, c_max: float | None = None):
        specs = list(specs)
        if not specs:
            raise ValueError("need at least one arm spec")
        if c_max is None:
            c_max = max(s.max_cost for s in specs)
            c_max = max(c_max, 1e-12)
        i_min = next((i for i, s in enumerate(specs) if s.p == 0.0 and s.max_cost == 0.0), None)
        i_max = next((i for i, s in enumerate(specs) if s.p == 1.0 and s.cost == c_max), None)
        if i_min is None:
            specs.append(ArmSpec(0.0, 0.0))
            i_min = len(specs) - 1
        if i_max is None:
            specs.append(ArmSpec(1.0, c_max))
            i_max = len(specs) - 1
        self.specs = specs
        self.seed = seed
        self.n = len(specs)
        self.c_max = float(c_max)
        self.i_min = i_min
        self.i_max = i_max

    def pull(self, t: int, arm: int) -> Observation:
        spec = self.specs[arm]
        if spec.p >= 1.0:
            r = 1.0
        elif spec.p <= 0.0:
            r = 0.0
        else:
            r = 1.0 if uniform(self.seed, _C_REWARD, t, arm) < spec.p else 0.0
        if isinstance(spec.cost, (tuple, list)):
            lo, hi = spec.cost
            c = lo + (hi - lo) * uniform(self.seed, _C_COST, t, arm)
        else:
            c = float(spec.cost)
        return Observation(r, c)

    def means(self) -> tuple[list[float], list[float]]:
        """True (p, mean cost) vectors, for benchmarks only."""
        return [s.p for s in self.specs], [s.mean_cost for s in self.specs]


def _beta_point(seed: int, t: int, a: int, b: int) -> float:
    # a-th smallest of a+b-1 uniforms has the Beta(a, b) law for integer a, b
    draws = sorted(uniform(seed, _C_POINT, t, lane) for lane in range(a + b - 1))
    return draws[a - 1]


class IntervalWorld:
    """Interval selection over a delta grid of sub-intervals of [0, 1].

    Playing an arm reveals only whether the hidden point landed in that
    closed interval, plus the interval's length as cost. The point itself
    stays hidden from the feedback channel.
    """

    def __init__(self, delta: float, point_dist, seed: int):
        self.grid: IntervalGrid = discretize_intervals(delta)
        self.seed = seed
        kind = point_dist[0]
        if kind == "beta":
            a, b = point_dist[1], point_dist[2]
            if int(a) != a or int(b) != b or a < 1 or b < 1:
                raise ValueError("beta point distribution needs integer shapes >= 1")
            self._dist = ("beta", int(a), int(b))
        elif kind == "uniform":
            self._dist = ("uniform",)
        else:
            raise ValueError(f"unknown point distribution {point_dist!r}")
        self.n = len(self.grid.arms)
        self.c_max = self.grid.c_max
        self.i_min = self.grid.i_min
        self.i_max = self.grid.i_max

    def _point(self, t: int) -> float:
        if self._dist[0] == "uniform":
            return uniform(self.seed, _C_POINT, t, 0)
        return _beta_point(self.seed, t, self._dist[1], self._dist[2])

    def pull(self, t: int, arm: int) -> Observation:
        a = self.grid.arms[arm]
        y = self._point(t)
        return Observation(1.0 if a.contains(y) else 0.0, a.length)

    def debug_point(self, t: int) -> float:
        """Side channel for diagnostics; never part of an observation."""
        return self._point(t)


class TrapWorld:
    """Deterministic three-arm world for the projection ablation.

    Arm 0 is safe (cost 1, reward 1 always; the guaranteed arm), arm 1 is a
    cheap trap (cost 0.05; reward 1 outside the scripted window, 0 inside),
    arm 2 is the null arm (cost 0, reward 0). Non-i.i.d. by construction:
    it exercises adversarial validity only.
    """

    SAFE, TRAP, ZERO = 0, 1, 2
    n = 3
    c_max = 1.0
    i_min = ZERO
    i_max = SAFE
    trap_cost = 0.05

    def __init__(self, window: tuple[int, int], seed: int = 0):
        start, end = window
        if not 0 <= start < end:
            raise ValueError("window must satisfy 0 <= start < end")
        self.window = (int(start), int(end))
        self.seed = seed

    def pull(self, t: int, arm: int) -> Observation:
        if arm == self.SAFE:
            return Observation(1.0, 1.0)
        if arm == self.ZERO:
            return Observation(0.0, 0.0)
        start, end = self.window
        failing = start <= t < end
        return Observation(0.0 if failing else 1.0, self.trap_cost)


class ScoreWorld:
    """Monotone score-threshold world.

    Each step hides a cutoff tau_x; the submitted threshold succeeds iff it
    reaches the cutoff (success at equality), so for fixed context the
    outcome is a single-jump non-decreasing step function of the threshold.
    ``inverse_cdf`` maps a uniform draw to tau_x; ``cost_fn(tau_x, tau)``
    must be non-decreasing in tau.
    """

    def __init__(self, inverse_cdf, cost_fn, seed: int, tau_min: float = 0.0,
                 tau_max: float = 1.0, cdf=None):
        self.inverse_cdf = inverse_cdf
        self.cost_fn = cost_fn
        self.seed = seed
        self.tau_min = tau_min
        self.tau_max = tau_max
        self.cdf = cdf  # known CDF, for benchmarks only

    def evaluate(self, t: int, tau: float) -> Observation:
        tau_x = self.inverse_cdf(uniform(self.seed, _C_SCORE, t, 0))
        y = 1.0 if tau >= tau_x else 0.0
        return Observation(y, float(self.cost_fn(tau_x, tau)))

    def expected_reward(self, tau: float) -> float:
        if self.cdf is None:
            raise ValueError("this world has no declared CDF")
        return self.cdf(tau)


def uniform_score_world(seed: int) -> ScoreWorld:
    """Cutoffs uniform on [0, 1], cost equal to the submitted threshold.

    Expected reward r(tau) = tau, so the reward margin constant is 1 and the
    cost Lipschitz constant is 1.
    """
    return ScoreWorld(
        inverse_cdf=lambda u: u,
        cost_fn=lambda x, tau: tau,
        seed=seed,
        cdf=lambda tau: min(max(tau, 0.0), 1.0),
    )


class PoissonDemand:
    """Truncated Poisson demand with a mid-horizon rate shift.

    a_t = clamp(Poisson(lam_t), 1, cap) with lam_t = ``before`` for
    t <= shift_t and ``after`` beyond. Sampled by CDF inversion; the clamp
    realizes the truncation.
    """

    def __init__(self, before: float, after: float, shift_t: int, cap: float, seed: int):
        if before <= 0 or after <= 0:
            raise ValueError("rates must be positive")
        if cap < 1:
            raise ValueError("cap must be at least 1")
        self.before = before
        self.after = after
        self.shift_t = shift_t
        self.cap = cap
        self.seed = seed

    def rate(self, t: int) -> float:
        return self.before if t <= self.shift_t else self.after

    def draw(self, t: int) -> float:
        lam = self.rate(t)
        u = uniform(self.seed, _C_DEMAND, t, 0)
        k, term = 0, math.exp(-lam)
        cum = term
        top = int(self.cap)
        while u > cum and k < top:
            k += 1
            term *= lam / k
            cum += term
        return float(min(max(k, 1), self.cap))


class OrWorld:
    """Set-function world: each arm succeeds independently with its own
    probability, and a probed set's value is 1 if any member succeeded.

    ``probe`` returns the realized value of every prefix of the played
    ordered chain (semi-bandit feedback). The expected value of a set S is
    1 - prod_{i in S} (1 - p_i).
    """

    def __init__(self, p, seed: int):
        p = [float(x) for x in p]
        if any(not 0.0 <= x <= 1.0 for x in p):
            raise ValueError("success probabilities must lie in [0, 1]")
        self.p = p
        self.n = len(p)
        self.seed = seed

    def probe(self, t: int, chain) -> list[float]:
        values = []
        hit = 0.0
        for arm in chain:
            if self.p[arm] >= 1.0:
                success = True
            elif self.p[arm] <= 0.0:
                success = False
            else:
                success = uniform(self.seed, _C_BITS, t, arm) < self.p[arm]
            if success:
                hit = 1.0
            values.append(hit)
        return values

    def value_oracle(self):
        """True expected set value, for benchmarks only."""
        p = self.p

        def f(subset) -> float:
            prod = 1.0
            for i in subset:
                prod *= 1.0 - p[i]
            return 1.0 - prod

        return f


def draw_or_probabilities(n: int, lo: float, hi: float, seed: int) -> list[float]:
    """Per-arm success probabilities uniform on [lo, hi], derived from the
    run seed so the environment is reproducible from the config alone."""
    return [lo + (hi - lo) * uniform(seed, _C_SETUP, 0, i) for i in range(n)]


def make_iid_arms(specs, seed: int) -> IidArmWorld:
    return IidArmWorld(specs, seed)


def make_interval_world(delta: float, point_dist, seed: int) -> IntervalWorld:
    return IntervalWorld(delta, point_dist, seed)


def make_adversarial_trap(seed: int, shift_window: tuple[int, int]) -> TrapWorld:
    return TrapWorld(shift_window, seed)


def make_score_world(inverse_cdf, cost_fn, seed: int, **kwargs) -> ScoreWorld:
    return ScoreWorld(inverse_cdf, cost_fn, seed, **kwargs)


def make_poisson_demand(before: float, after: float, shift_t: int, cap: float,
                        seed: int) -> PoissonDemand:
    return PoissonDemand(before, after, shift_t, cap, seed)


def make_or_world(p, seed: int) -> OrWorld:
    return OrWorld(p, seed)
