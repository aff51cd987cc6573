"""Unprojected additive calibration engine.

The single mechanism shared by every controller in this package: a scalar
state (a dual price, a score threshold, a probing budget, or an inventory
level) moves each step by ``eta_t * (phi - Y_t)``, where ``Y_t`` in [0, 1]
is the observed success feedback and ``phi`` is the coverage target. The
state is never clamped here; any boundary handling belongs to the module
that consumes the state. Keeping the update raw is what makes the coverage
ledger identity exact: over any window driven with a constant step size,

    mean(Y) - phi == -(state_end - state_start) / (eta * L)

up to floating-point rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

CONSTANT = "constant"
POWER_DECAY = "power"


@dataclass(frozen=True)
class StepSchedule:
    """Step-size sequence eta_t.

    ``constant``:  eta_t = c for all t >= 1.
    ``power``:     eta_t = c * (t + index_offset)**(-p) with p in [0, 1),
                   strictly positive and non-increasing in t.

    ``index_offset`` shifts the decay index; a schedule like 5/sqrt(t+1)
    is ``power(c=5, p=0.5, index_offset=1)``.
    """

    kind: str
    c: float
    p: float = 0.0
    index_offset: int = 0

    def __post_init__(self):
        if self.kind not in (CONSTANT, POWER_DECAY):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.c <= 0.0:
            raise ValueError(f"step scale must be positive, got {self.c}")
        if self.kind == POWER_DECAY and not 0.0 <= self.p < 1.0:
            raise ValueError(f"decay exponent must lie in [0, 1), got {self.p}")
        if self.index_offset < 0:
            raise ValueError("index_offset must be non-negative")

    @classmethod
    def constant(cls, c: float) -> "StepSchedule":
        return cls(CONSTANT, c)

    @classmethod
    def power(cls, c: float, p: float, index_offset: int = 0) -> "StepSchedule":
        return cls(POWER_DECAY, c, p, index_offset)

    @property
    def is_constant(self) -> bool:
        return self.kind == CONSTANT or self.p == 0.0

    def eta(self, t: int) -> float:
        """Step size at update index t (1-based)."""
        if t < 1:
            raise ValueError("step index starts at 1")
        if self.kind == CONSTANT or self.p == 0.0:
            return self.c
        return self.c * float(t + self.index_offset) ** (-self.p)

    def max_eta(self) -> float:
        """Largest step size the schedule ever produces (eta_1)."""
        return self.eta(1)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "c": self.c,
            "p": self.p,
            "index_offset": self.index_offset,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StepSchedule":
        return cls(d["kind"], d["c"], d.get("p", 0.0), d.get("index_offset", 0))


@dataclass
class ControllerState:
    """The controlled scalar, its target, and its position in the schedule.

    ``anchor`` remembers the value at the last ledger reset so windowed
    coverage checks can be evaluated without retaining the full history.
    """

    value: float
    phi: float
    schedule: StepSchedule
    step_index: int = 1
    anchor: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not 0.0 < self.phi < 1.0:
            raise ValueError(f"coverage target must lie strictly in (0, 1), got {self.phi}")
        if self.anchor is None:
            self.anchor = self.value

    def current_eta(self) -> float:
        return self.schedule.eta(self.step_index)

    def drift(self, amount: float) -> float:
        """Move the state by eta_t * amount and advance the step index.

        Returns the step size that was applied. This is the raw primitive;
        use :func:`aci_update` for the standard (phi - reward) form.
        """
        eta = self.schedule.eta(self.step_index)
        self.value += eta * amount
        self.step_index += 1
        return eta


def aci_update(state: ControllerState, reward: float) -> ControllerState:
    """Apply one additive calibration step: value += eta_t * (phi - reward).

    ``reward`` must lie in [0, 1]; it is binary in most settings but
    fractional success rates are accepted everywhere. No projection or
    clamping is ever applied to the state.
    """
    if not 0.0 <= reward <= 1.0:
        raise ValueError(f"reward must lie in [0, 1], got {reward}")
    state.drift(state.phi - reward)
    return state


@dataclass
class ValidityLedger:
    """Exact coverage accounting for one update window.

    Accumulates the rewards fed to a controller since ``window_start`` so
    the telescoping identity can be checked against the state trajectory.
    """

    phi: float
    schedule: StepSchedule
    window_start: int = 1
    reward_sum: float = 0.0
    step_count: int = 0

    def record(self, reward: float) -> None:
        self.reward_sum += reward
        self.step_count += 1

    def reset(self, window_start: int) -> None:
        self.window_start = window_start
        self.reward_sum = 0.0
        self.step_count = 0

    def coverage(self) -> float:
        if self.step_count == 0:
            raise ValueError("ledger window is empty")
        return self.reward_sum / self.step_count


def telescoping_check(ledger: ValidityLedger, state_start: float, state_end: float) -> float:
    """Residual of the exact coverage identity over the ledger window.

    Returns ((reward_sum / L) - phi) + (state_end - state_start) / (eta * L).
    For any window driven exclusively by :func:`aci_update` with a constant
    step size the residual is zero up to accumulated floating rounding
    (<= 1e-9 for windows up to 1e6 steps with states of magnitude <= 100).
    Decaying schedules are rejected: the identity is only stated for a
    constant step.
    """
    if not ledger.schedule.is_constant:
        raise ValueError("telescoping identity requires a constant step size")
    if ledger.step_count < 1:
        raise ValueError("ledger window is empty")
    eta = ledger.schedule.eta(1)
    drift_term = (state_end - state_start) / (eta * ledger.step_count)
    return (ledger.reward_sum / ledger.step_count - ledger.phi) + drift_term


def coverage_bound(state_range: float, eta: float, window_len: int) -> float:
    """Worst-case deviation of windowed coverage from the target.

    ``state_range`` is an a-priori bound on |state_end - state_start| over
    the window; the guaranteed deviation is state_range / (eta * L).
    """
    if state_range < 0.0:
        raise ValueError("state range must be non-negative")
    if eta <= 0.0:
        raise ValueError("step size must be positive")
    if window_len < 1:
        raise ValueError("window length must be at least 1")
    return state_range / (eta * window_len)
