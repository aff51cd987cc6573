"""Memoryless scalar controllers: threshold calibration and inventory.

Both apply the additive update directly to the acted-upon quantity. The raw
state is never clamped — only the action submitted to the world is. For the
threshold controller the submitted action is clamp(tau, tau_min, tau_max);
for the inventory controller the stocked level is min(q, D). Keeping the
state raw preserves the exact coverage ledger identity.
"""

from __future__ import annotations

from dataclasses import dataclass

from .control import ControllerState, StepSchedule, aci_update
from .metrics import TraceRecord


@dataclass(frozen=True)
class ThresholdConfig:
    tau_min: float
    tau_max: float
    phi: float
    schedule: StepSchedule

    def __post_init__(self):
        if self.tau_max <= self.tau_min:
            raise ValueError("tau_max must exceed tau_min")
        if not 0.0 < self.phi < 1.0:
            raise ValueError("phi must lie strictly in (0, 1)")


def threshold_step(tau: ControllerState, cfg: ThresholdConfig, env) -> TraceRecord:
    """Submit the clamped threshold, observe the binary outcome, update raw.

    The environment is queried at tau_eff = clamp(tau, tau_min, tau_max) and
    must return a success bit in {0, 1} plus a cost. On any input sequence
    satisfying the monotone-step model the raw state then stays inside
    [tau_min - eta_max, tau_max + eta_max].
    """
    t = tau.step_index
    raw = tau.value
    tau_eff = min(max(raw, cfg.tau_min), cfg.tau_max)
    y, cost = env.evaluate(t, tau_eff)
    if y not in (0, 1):
        raise ValueError(f"threshold feedback must be binary, got {y!r}")
    aci_update(tau, float(y))
    boundary = raw < cfg.tau_min or raw > cfg.tau_max
    return TraceRecord(
        t=t,
        action=float(tau_eff),
        reward=float(y),
        cost=float(cost),
        state=raw,
        extras={"boundary": 1.0 if boundary else 0.0},
    )


@dataclass(frozen=True)
class NewsvendorConfig:
    """Inventory controller parameters.

    ``demand_cap`` is D: per-step demand lives in [1, D] and stocked
    inventory is capped at D. With ``dynamic_carryover`` the leftover
    (q_eff - a)^+ persists to the next period, which requires every step
    size to lie in (0, 1) so the prescribed level is always reachable by
    ordering non-negative stock.
    """

    demand_cap: float
    phi: float
    schedule: StepSchedule
    dynamic_carryover: bool = False

    def __post_init__(self):
        if self.demand_cap < 1.0:
            raise ValueError("demand cap D must be at least 1")
        if not 0.0 < self.phi < 1.0:
            raise ValueError("phi must lie strictly in (0, 1)")
        if self.dynamic_carryover and self.schedule.max_eta() >= 1.0:
            raise ValueError(
                "dynamic carry-over requires step sizes in (0, 1); "
                f"schedule starts at {self.schedule.max_eta()}"
            )


def newsvendor_step(q: ControllerState, cfg: NewsvendorConfig, demand: float) -> TraceRecord:
    """One inventory period: stock min(q, D), serve min(demand, stocked).

    Updates q by eta_t * (phi * a - y). The drift is strictly positive at
    empty inventory and strictly negative above D, so the state needs no
    projection. In dynamic mode the no-returns identity
    q_next - leftover = y (1 - eta) + eta phi a >= 0
    is asserted on every step.
    """
    if not 1.0 <= demand <= cfg.demand_cap:
        raise ValueError(f"demand {demand} outside [1, {cfg.demand_cap}]")
    t = q.step_index
    raw = q.value
    q_eff = min(raw, cfg.demand_cap)
    y = min(demand, q_eff)
    leftover = max(q_eff - demand, 0.0)
    eta = q.drift(cfg.phi * demand - y)
    if cfg.dynamic_carryover:
        order_up = y * (1.0 - eta) + eta * cfg.phi * demand
        assert order_up >= 0.0, "no-returns identity violated"
        assert q.value - leftover >= -1e-9, (
            f"prescribed level {q.value} below carried inventory {leftover} at step {t}"
        )
    return TraceRecord(
        t=t,
        action=float(q_eff),
        reward=float(y / demand),
        cost=float(q_eff),
        state=raw,
        extras={"a": float(demand), "y": float(y), "leftover": float(leftover)},
    )


def fill_rate(trace) -> float:
    """Total fulfilled over total demanded, sum(y) / sum(a).

    For a constant step size this equals
    phi - (q_end - q_start) / (eta * sum(a)) up to floating rounding.
    """
    if not trace:
        raise ValueError("trace is empty")
    served = sum(r.extras["y"] for r in trace)
    asked = sum(r.extras["a"] for r in trace)
    return served / asked
