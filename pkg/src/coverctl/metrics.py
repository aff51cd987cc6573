"""Validity and efficiency accounting over per-step traces."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(slots=True)
class TraceRecord:
    """One row of per-step experiment output.

    ``action`` is an arm index, an effective threshold, an inventory level,
    or a compact chain string depending on the setting. ``state`` is the raw
    controller value at decision time. ``k`` is the probing budget for chain
    settings and 0 elsewhere.
    """

    t: int
    action: object
    reward: float
    cost: float
    state: float
    k: int = 0
    extras: dict | None = None


def rewards_of(trace) -> np.ndarray:
    return np.fromiter((r.reward for r in trace), dtype=float, count=len(trace))


def costs_of(trace) -> np.ndarray:
    return np.fromiter((r.cost for r in trace), dtype=float, count=len(trace))


def coverage_series(trace) -> np.ndarray:
    """Running mean of rewards: coverage_cum[t] = (1/t) * sum_{s<=t} Y_s."""
    y = rewards_of(trace)
    if y.size == 0:
        raise ValueError("trace is empty")
    return np.cumsum(y) / np.arange(1, y.size + 1)


def window_coverage(trace, lo: int, hi: int) -> float:
    """Mean reward over steps with lo <= t <= hi (t as recorded)."""
    vals = [r.reward for r in trace if lo <= r.t <= hi]
    if not vals:
        raise ValueError(f"no records in window [{lo}, {hi}]")
    return float(np.mean(vals))


def regret_series(trace, c_star, positive_part: bool = False) -> np.ndarray:
    """Cumulative sum of (cost_t - c_star), optionally clipped at 0 per step.

    ``c_star`` may be a scalar or a per-step array (phase-wise benchmarks).
    """
    c = costs_of(trace)
    gap = c - np.asarray(c_star, dtype=float)
    if gap.shape not in ((), c.shape):
        raise ValueError("benchmark array length does not match the trace")
    if positive_part:
        gap = np.maximum(gap, 0.0)
    return np.cumsum(gap)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r2: float
    clipped: bool = False


def sublinearity_fit(end_regrets) -> SlopeFit:
    """Least-squares fit of log(regret) on log(T).

    ``end_regrets`` is a sequence of (T, regret) pairs from at least three
    horizons. Non-positive regrets are clipped to 1 and the clip is recorded
    on the returned fit.
    """
    pts = list(end_regrets)
    if len(pts) < 3:
        raise ValueError("need at least 3 horizons for a slope fit")
    ts = np.array([float(t) for t, _ in pts])
    rs = np.array([float(r) for _, r in pts])
    clipped = bool(np.any(rs < 1.0))
    rs = np.maximum(rs, 1.0)
    x = np.log(ts)
    y = np.log(rs)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return SlopeFit(float(slope), float(intercept), r2, clipped)


def parse_chain(action) -> tuple[int, ...]:
    """Decode the compact chain string used in trace rows ('-' is empty)."""
    if isinstance(action, str):
        if action in ("", "-"):
            return ()
        return tuple(int(a) for a in action.split("|"))
    raise ValueError(f"not a chain action: {action!r}")


def deviation_counter(trace, report, order_sensitive: bool = False) -> int:
    """Count steps whose played chain differs from the greedy prefix.

    The primary comparison is set-based: the reward depends only on which
    arms were probed, so an order-swapped prefix with identical contents
    does not count. Pass ``order_sensitive=True`` for the stricter count.
    Steps with an empty budget never count.
    """
    n = len(report.chain)
    count = 0
    for rec in trace:
        chain = parse_chain(rec.action)
        if any(a >= n or a < 0 for a in chain):
            raise ValueError("trace chain references an arm outside the benchmark's arm set")
        if not chain:
            continue
        prefix = report.chain[: len(chain)]
        if order_sensitive:
            mismatch = chain != prefix
        else:
            mismatch = set(chain) != set(prefix)
        if mismatch:
            count += 1
    return count


@dataclass
class MetricsReport:
    """Per-run summary assembled after a simulation.

    Construction checks the structural invariants: coverage stays in
    [0, 1] and positive-part regret never decreases (plain regret may).
    """

    coverage_cum: np.ndarray
    coverage_final: float
    regret_cum: np.ndarray
    regret_pos_cum: np.ndarray
    boundary_steps: int
    greedy_deviation_steps: int | None = None
    greedy_deviation_steps_ordered: int | None = None
    slope_fit: SlopeFit | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.coverage_cum.size == 0:
            raise ValueError("empty coverage series")
        if float(self.coverage_cum.min()) < -1e-12 or float(self.coverage_cum.max()) > 1 + 1e-12:
            raise ValueError("coverage series escaped [0, 1]")
        if self.regret_pos_cum.size and float(np.diff(self.regret_pos_cum).min(initial=0.0)) < -1e-9:
            raise ValueError("positive-part regret series must be non-decreasing")

    def summary(self) -> dict:
        out = {
            "steps": int(self.coverage_cum.size),
            "coverage_final": float(self.coverage_final),
            "regret_final": float(self.regret_cum[-1]),
            "regret_pos_final": float(self.regret_pos_cum[-1]),
            "boundary_steps": int(self.boundary_steps),
        }
        if self.greedy_deviation_steps is not None:
            out["greedy_deviation_steps"] = int(self.greedy_deviation_steps)
            out["greedy_deviation_steps_ordered"] = int(self.greedy_deviation_steps_ordered)
        if self.slope_fit is not None:
            out["slope"] = self.slope_fit.slope
            out["slope_r2"] = self.slope_fit.r2
            out["slope_clipped"] = self.slope_fit.clipped
        out.update(self.extras)
        return out
