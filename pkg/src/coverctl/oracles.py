"""Exact offline benchmarks for the regret metrics.

Every benchmark here consumes true environment parameters, never samples.
The linear program over arm mixtures is solved by support-2 enumeration
(one coverage constraint plus the simplex constraint admit an optimal basic
solution mixing at most two arms), which keeps the solution exact without a
solver dependency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class InfeasibleBenchmarkError(ValueError):
    """No policy of the benchmark class can reach the coverage target."""


@dataclass(frozen=True)
class LpSolution:
    """Cheapest arm mixture meeting the coverage target in expectation."""

    c_star: float
    mixture: tuple[float, ...]

    def support(self) -> list[int]:
        return [i for i, x in enumerate(self.mixture) if x > 0.0]


def lp_benchmark(p, omega, phi: float) -> LpSolution:
    """Minimize sum x_i omega_i over the simplex s.t. sum x_i p_i >= phi.

    Exact: enumerates every single arm with p_i >= phi and every pair mixed
    to meet the coverage constraint with equality, and returns the cheapest.

    Parameters
    ----------
    p, omega : sequences of true mean rewards and mean costs per arm.
    phi : coverage target; phi <= 0 makes the constraint vacuous.

    Raises
    ------
    InfeasibleBenchmarkError
        If no mixture reaches phi (i.e. max_i p_i < phi).
    """
    p = [float(x) for x in p]
    omega = [float(x) for x in omega]
    if len(p) != len(omega) or not p:
        raise ValueError("p and omega must be equal-length, non-empty")
    n = len(p)
    tol = 1e-9
    best_cost = math.inf
    best_mix = None
    for i in range(n):
        if p[i] >= phi - tol and omega[i] < best_cost:
            best_cost = omega[i]
            mix = [0.0] * n
            mix[i] = 1.0
            best_mix = mix
    for i in range(n):
        for j in range(n):
            if i == j or p[i] <= p[j]:
                continue
            # weight on the higher-reward arm i to meet the target exactly
            x = (phi - p[j]) / (p[i] - p[j])
            if x < 0.0 or x > 1.0:
                continue
            cost = x * omega[i] + (1.0 - x) * omega[j]
            if cost < best_cost - 1e-15:
                best_cost = cost
                mix = [0.0] * n
                mix[i] = x
                mix[j] = 1.0 - x
                best_mix = mix
    if best_mix is None:
        raise InfeasibleBenchmarkError(
            f"arm-mixture benchmark infeasible: no mixture reaches phi={phi}"
        )
    return LpSolution(c_star=float(best_cost), mixture=tuple(best_mix))


def _beta_density_integral(a: int, b: int, lo: float, hi: float, tol: float) -> float:
    """Adaptive Simpson integration of x^(a-1) (1-x)^(b-1) over [lo, hi]."""

    def f(x: float) -> float:
        return x ** (a - 1) * (1.0 - x) ** (b - 1)

    def simpson(x0, x2, f0, f2):
        x1 = 0.5 * (x0 + x2)
        f1 = f(x1)
        return x1, f1, (x2 - x0) * (f0 + 4.0 * f1 + f2) / 6.0

    def recurse(x0, x2, f0, f2, whole, x1, f1, eps, depth):
        lm, flm, left = simpson(x0, x1, f0, f1)
        rm, frm, right = simpson(x1, x2, f1, f2)
        if depth > 60 or abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return recurse(x0, x1, f0, f1, left, lm, flm, eps / 2.0, depth + 1) + recurse(
            x1, x2, f1, f2, right, rm, frm, eps / 2.0, depth + 1
        )

    if hi <= lo:
        return 0.0
    f0, f2 = f(lo), f(hi)
    x1, f1, whole = simpson(lo, hi, f0, f2)
    return recurse(lo, hi, f0, f2, whole, x1, f1, tol, 0)


def beta_cdf(x: float, a: int, b: int, tol: float = 1e-10) -> float:
    """CDF of Beta(a, b) for integer shapes, by adaptive integration."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    norm = (
        math.factorial(a - 1) * math.factorial(b - 1) / math.factorial(a + b - 1)
    )
    return _beta_density_integral(a, b, 0.0, x, tol * norm) / norm


def threshold_benchmark(r_curve, c_curve, phi: float, tau_min: float = 0.0,
                        tau_max: float = 1.0) -> tuple[float, float]:
    """Cheapest stationary threshold meeting the target in expectation.

    ``r_curve`` must be continuous and non-decreasing with
    r(tau_min) <= phi <= r(tau_max); the root of r(tau) = phi is located by
    bisection to 1e-10 and its cost is read off ``c_curve``.
    """
    r_lo, r_hi = r_curve(tau_min), r_curve(tau_max)
    if not r_lo <= phi <= r_hi:
        raise InfeasibleBenchmarkError(
            f"threshold benchmark infeasible: phi={phi} outside [{r_lo}, {r_hi}]"
        )
    lo, hi = tau_min, tau_max
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if r_curve(mid) < phi:
            lo = mid
        else:
            hi = mid
    tau_star = 0.5 * (lo + hi)
    return tau_star, float(c_curve(tau_star))


@dataclass(frozen=True)
class IntervalBenchmark:
    """Optimal grid interval plus the continuous optimum as metadata."""

    lo: float
    hi: float
    c_star: float
    continuous_c_star: float

    @property
    def discretization_gap(self) -> float:
        return self.c_star - self.continuous_c_star


def _continuous_interval_optimum(point_cdf, phi: float, resolution: int = 2000) -> float:
    """Shortest window [l, l+w] with mass >= phi, to ~1/resolution accuracy."""
    grid = np.linspace(0.0, 1.0, resolution + 1)
    cdf = np.array([point_cdf(x) for x in grid])
    lo_w, hi_w = 0.0, 1.0
    for _ in range(40):
        w = 0.5 * (lo_w + hi_w)
        offset = int(round(w * resolution))
        if offset >= resolution:
            best = cdf[-1] - cdf[0]
        else:
            best = float(np.max(cdf[offset:] - cdf[: resolution + 1 - offset]))
        if best >= phi:
            hi_w = w
        else:
            lo_w = w
    return hi_w


def interval_benchmark(delta: float, point_cdf, phi: float) -> IntervalBenchmark:
    """Shortest grid interval with true mass at least phi.

    Enumerates all intervals [i delta, j delta]; ties break to the smallest
    left endpoint. This discrete optimum is the regret benchmark; the
    continuous optimum is reported alongside so the rounding loss is visible
    separately.
    """
    m = round(1.0 / delta)
    if m < 1 or abs(m * delta - 1.0) > 1e-12:
        raise ValueError(f"delta={delta} does not divide 1")
    cdf = [point_cdf(i * delta) for i in range(m + 1)]
    best = None
    for j_minus_i in range(1, m + 1):
        for i in range(0, m + 1 - j_minus_i):
            mass = cdf[i + j_minus_i] - cdf[i]
            if mass >= phi - 1e-12:
                best = (i * delta, (i + j_minus_i) * delta, j_minus_i * delta)
                break
        if best is not None:
            break
    if best is None:
        # full support not reached; fall back to the whole interval
        best = (0.0, 1.0, 1.0)
    cont = _continuous_interval_optimum(point_cdf, phi)
    return IntervalBenchmark(lo=best[0], hi=best[1], c_star=best[2], continuous_c_star=cont)


def newsvendor_benchmark(pmf, phi: float) -> tuple[float, float]:
    """Base-stock level whose expected fulfillment is phi times mean demand.

    ``pmf`` maps demand values to probabilities. The expected fulfillment
    r(q) = E[min(a, q)] is piecewise linear and concave; the root of
    r(q) = phi * mu is found by bisection to 1e-8. Returns (q_star, mu).
    """
    items = sorted(pmf.items()) if isinstance(pmf, dict) else sorted(pmf)
    total = sum(w for _, w in items)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"pmf weights sum to {total}, expected 1")
    mu = sum(v * w for v, w in items)

    def r(q: float) -> float:
        return sum(w * min(v, q) for v, w in items)

    target = phi * mu
    hi = max(v for v, _ in items)
    if target > r(hi) + 1e-12:
        raise InfeasibleBenchmarkError(
            f"inventory benchmark infeasible: phi*mu={target} exceeds E[a]={r(hi)}"
        )
    lo = 0.0
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if r(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), mu


def truncated_poisson_pmf(lam: float, cap: int) -> dict[int, float]:
    """Law of clamp(Poisson(lam), 1, cap): the mass below 1 moves to 1 and
    the tail above cap moves to cap."""
    if cap < 1:
        raise ValueError("cap must be at least 1")
    term = math.exp(-lam)
    pmf = {1: term}  # P(X = 0) clamps up to 1
    cum = term
    for k in range(1, cap):
        term *= lam / k
        pmf[k] = pmf.get(k, 0.0) + term
        cum += term
    pmf[cap] = pmf.get(cap, 0.0) + max(1.0 - cum, 0.0)
    return pmf


@dataclass(frozen=True)
class GreedyReport:
    """Greedy chain of a monotone set function with its value profile.

    ``prefix_values[k]`` is the true expected value of the first k chain
    arms (prefix_values[0] == 0). ``gap_delta`` is the smallest positional
    gap between the chosen arm and any competitor.
    """

    chain: tuple[int, ...]
    prefix_values: tuple[float, ...]
    gap_delta: float

    def budget_for(self, rho: float) -> int | None:
        """Minimum prefix length whose value reaches rho (None if never)."""
        for k, v in enumerate(self.prefix_values):
            if v >= rho:
                return k
        return None

    def margin_above(self, phi: float) -> float | None:
        """Value slack of the prefix one past the needed budget, minus phi."""
        k = self.budget_for(phi)
        if k is None or k + 1 >= len(self.prefix_values):
            return None
        return self.prefix_values[k + 1] - phi

    def is_degenerate(self, phi: float, tol: float = 1e-6) -> bool:
        m = self.margin_above(phi)
        return m is None or m <= tol


def greedy_chain(f_oracle, n: int) -> GreedyReport:
    """Build the full greedy ordering under the true expected set value.

    ``f_oracle`` evaluates the expected value of an arm subset exactly.
    Ties break to the lowest arm index. Rejects non-monotone value profiles.
    """
    if n < 1:
        raise ValueError("need at least one arm")
    chain: list[int] = []
    values = [0.0]
    remaining = list(range(n))
    gaps: list[float] = []
    for _ in range(n):
        scored = [(f_oracle(chain + [i]), i) for i in remaining]
        best_val, best_arm = max(scored, key=lambda vi: (vi[0], -vi[1]))
        # positional gap: chosen value minus the best alternative extension;
        # extending by an arm already in the prefix leaves the union unchanged
        alternatives = [v for v, i in scored if i != best_arm]
        if chain:
            alternatives.append(values[-1])
        if alternatives:
            gaps.append(best_val - max(alternatives))
        if best_val < values[-1] - 1e-12:
            raise ValueError("set function is not monotone along the greedy chain")
        chain.append(best_arm)
        remaining.remove(best_arm)
        values.append(best_val)
    return GreedyReport(
        chain=tuple(chain),
        prefix_values=tuple(values),
        gap_delta=min(gaps) if gaps else math.inf,
    )
