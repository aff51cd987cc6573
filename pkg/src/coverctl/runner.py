"""Simulation drivers and the artifact pipeline.

Drivers loop one controller against one environment, enforce the state
invariants on every step, and keep an exact coverage ledger. The experiment
layer turns an :class:`~coverctl.presets.ExperimentConfig` plus a replica
index into a trace CSV, a metrics summary, and benchmark values; replicas
derive independent substreams from the master seed and may run in any order
or in parallel without changing a byte of output.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import environments as envs
from . import metrics as mt
from . import oracles
from .bandit import BOUNDARY_RULE, PROJECTED_BASELINE, BanditConfig, BanditState, bandit_step
from .chains import POSITION_KEYED, PREFIX_KEYED, BudgetState, ChainConfig, ChainStats, acog_step
from .control import ControllerState, StepSchedule, ValidityLedger, telescoping_check
from .presets import ExperimentConfig, expand_variants
from .rng import replica_seed
from .threshold import NewsvendorConfig, ThresholdConfig, newsvendor_step, threshold_step

_TOL = 1e-12


@dataclass
class SimulationResult:
    records: list[mt.TraceRecord]
    final_state: float
    info: dict


def drive_bandit(cfg: BanditConfig, schedule: StepSchedule, env, T: int,
                 keep_trace: bool = True) -> SimulationResult:
    """Run the primal-dual loop for T steps.

    In boundary mode the dual is asserted to stay inside
    [-eta_max, cap + eta_max] on every step after the warm-up pass. The
    coverage ledger covers the controlled window (warm-up plays excluded,
    since the dual does not move during them).
    """
    state = BanditState(cfg, schedule)
    ledger = ValidityLedger(cfg.phi, schedule, window_start=cfg.n + 1)
    eta_max = schedule.max_eta()
    lo = -eta_max - _TOL
    hi = cfg.lambda_cap + eta_max + _TOL
    check = cfg.mode == BOUNDARY_RULE
    records: list[mt.TraceRecord] = []
    boundary_steps = 0
    for _ in range(T):
        rec = bandit_step(state, cfg, env)
        if rec.t > cfg.n:
            ledger.record(rec.reward)
            if check:
                assert lo <= rec.state <= hi, (
                    f"dual {rec.state} escaped [{lo}, {hi}] at step {rec.t}"
                )
        boundary_steps += int(rec.extras["boundary"])
        if keep_trace:
            records.append(rec)
    final = state.dual.value
    if check and T > cfg.n:
        assert lo <= final <= hi, f"final dual {final} escaped [{lo}, {hi}]"
    info = {"boundary_steps": boundary_steps}
    if T > cfg.n:
        info["window_coverage"] = ledger.coverage()
        info["window_len"] = ledger.step_count
        if schedule.is_constant and cfg.mode == BOUNDARY_RULE:
            info["ledger_residual"] = telescoping_check(ledger, 0.0, final)
    return SimulationResult(records, final, info)


def drive_threshold(cfg: ThresholdConfig, env, T: int, keep_trace: bool = True,
                    tau_init: float | None = None) -> SimulationResult:
    state = ControllerState(
        value=cfg.tau_min if tau_init is None else tau_init,
        phi=cfg.phi,
        schedule=cfg.schedule,
    )
    start = state.value
    ledger = ValidityLedger(cfg.phi, cfg.schedule)
    eta_max = cfg.schedule.max_eta()
    lo = cfg.tau_min - eta_max - _TOL
    hi = cfg.tau_max + eta_max + _TOL
    records: list[mt.TraceRecord] = []
    for _ in range(T):
        rec = threshold_step(state, cfg, env)
        ledger.record(rec.reward)
        assert lo <= rec.state <= hi, (
            f"threshold {rec.state} escaped [{lo}, {hi}] at step {rec.t}"
        )
        if keep_trace:
            records.append(rec)
    info = {"coverage": ledger.coverage()}
    if cfg.schedule.is_constant:
        info["ledger_residual"] = telescoping_check(ledger, start, state.value)
    return SimulationResult(records, state.value, info)


def drive_newsvendor(cfg: NewsvendorConfig, demand_stream, T: int,
                     keep_trace: bool = True, q_init: float = 0.0) -> SimulationResult:
    state = ControllerState(value=q_init, phi=cfg.phi, schedule=cfg.schedule)
    records: list[mt.TraceRecord] = []
    served = 0.0
    asked = 0.0
    for _ in range(T):
        demand = demand_stream.draw(state.step_index)
        rec = newsvendor_step(state, cfg, demand)
        assert state.value >= -1e-9, f"inventory went negative at step {rec.t}"
        served += rec.extras["y"]
        asked += rec.extras["a"]
        if keep_trace:
            records.append(rec)
    return SimulationResult(records, state.value, {"fill_rate": served / asked})


def drive_acog(cfg: ChainConfig, schedule: StepSchedule, env, T: int,
               variant: str = PREFIX_KEYED, keep_trace: bool = True) -> SimulationResult:
    budget = BudgetState(theta=ControllerState(value=0.0, phi=cfg.phi, schedule=schedule))
    stats = ChainStats(cfg.n, cfg.horizon_T, variant)
    ledger = ValidityLedger(cfg.phi, schedule)
    eta_max = schedule.max_eta()
    records: list[mt.TraceRecord] = []
    for _ in range(T):
        rec = acog_step(budget, stats, cfg, env)
        ledger.record(rec.reward)
        assert -eta_max - _TOL <= rec.state <= cfg.n + _TOL, (
            f"budget state {rec.state} escaped [-{eta_max}, {cfg.n}] at step {rec.t}"
        )
        assert budget.K == min(cfg.n, math.ceil(budget.theta.value))
        if keep_trace:
            records.append(rec)
    final = budget.theta.value
    assert -eta_max - _TOL <= final <= cfg.n + _TOL
    info = {"coverage": ledger.coverage(), "contexts": stats.context_count()}
    if schedule.is_constant:
        info["ledger_residual"] = telescoping_check(ledger, 0.0, final)
    return SimulationResult(records, final, {**info, "stats": stats})


# --- experiment layer -------------------------------------------------------

BASE_COLUMNS = ("t", "action", "reward", "cost", "state", "K",
                "coverage_cum", "regret_cum", "regret_pos_cum")


def _f17(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_action(a) -> str:
    if isinstance(a, str):
        return a
    if isinstance(a, (int, np.integer)):
        return str(int(a))
    return _f17(a)


def render_csv(records, c_star, coverage_mode: str = "mean") -> str:
    """Serialize a trace with the cumulative metric columns.

    Floats carry 17 significant digits so the file round-trips exactly.
    ``c_star`` may be a scalar or one value per step (phase-wise oracles).
    ``coverage_mode='fill'`` tracks served/asked totals instead of a mean.
    """
    if not records:
        raise ValueError("cannot serialize an empty trace")
    extra_cols = sorted(records[0].extras) if records[0].extras else []
    lines = [",".join(BASE_COLUMNS + tuple(extra_cols))]
    per_step = np.ndim(c_star) > 0
    num = 0.0
    den = 0.0
    cum_r = 0.0
    cum_rp = 0.0
    for idx, rec in enumerate(records):
        if coverage_mode == "fill":
            num += rec.extras["y"]
            den += rec.extras["a"]
        else:
            num += rec.reward
            den = idx + 1.0
        cs = float(c_star[idx]) if per_step else float(c_star)
        gap = rec.cost - cs
        cum_r += gap
        cum_rp += max(gap, 0.0)
        row = [
            str(rec.t),
            _fmt_action(rec.action),
            _f17(rec.reward),
            _f17(rec.cost),
            _f17(rec.state),
            str(rec.k),
            _f17(num / den),
            _f17(cum_r),
            _f17(cum_rp),
        ]
        row.extend(_f17(rec.extras[k]) for k in extra_cols)
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _interval_cdf(points):
    kind = points[0]
    if kind == "uniform":
        return lambda x: min(max(x, 0.0), 1.0)
    return lambda x: oracles.beta_cdf(x, int(points[1]), int(points[2]))


def _bandit_setup(config: ExperimentConfig, seed: int):
    envd = config.environment
    kind = envd["kind"]
    if kind == "interval":
        world = envs.IntervalWorld(envd["delta"], tuple(envd["points"]), seed)
        bench = oracles.interval_benchmark(envd["delta"], _interval_cdf(envd["points"]), config.phi)
        c_star = bench.c_star
        bench_dict = {
            "benchmark": "grid_interval",
            "c_star": bench.c_star,
            "interval": [bench.lo, bench.hi],
            "continuous_c_star": bench.continuous_c_star,
            "discretization_gap": bench.discretization_gap,
        }
    elif kind == "trap":
        world = envs.TrapWorld(tuple(envd["window"]), seed)
        start, end = world.window
        fail = max(0, min(end, config.T + 1) - max(start, 1))
        p = [1.0, 1.0 - fail / config.T, 0.0]
        omega = [1.0, world.trap_cost, 0.0]
        sol = oracles.lp_benchmark(p, omega, config.phi)
        c_star = sol.c_star
        bench_dict = {
            "benchmark": "stationary_lp_of_average_rates",
            "c_star": sol.c_star,
            "mixture": list(sol.mixture),
        }
    elif kind == "iid":
        specs = [envs.ArmSpec(p, tuple(c) if isinstance(c, list) else c)
                 for p, c in envd["specs"]]
        world = envs.IidArmWorld(specs, seed)
        p_vec, omega = world.means()
        sol = oracles.lp_benchmark(p_vec, omega, config.phi)
        c_star = sol.c_star
        bench_dict = {
            "benchmark": "arm_mixture_lp",
            "c_star": sol.c_star,
            "mixture": list(sol.mixture),
        }
    else:
        raise ValueError(f"environment kind {kind!r} does not feed an arm selector")
    mode = PROJECTED_BASELINE if config.algorithm == "pd_bandit_projected" else BOUNDARY_RULE
    cfg = BanditConfig(
        n=world.n,
        c_max=world.c_max,
        phi=config.phi,
        horizon_T=config.T,
        i_min=world.i_min,
        i_max=world.i_max,
        lambda_cap=config.algorithm_params.get("lambda_cap"),
        mode=mode,
    )
    return world, cfg, c_star, bench_dict


def run_replica(config: ExperimentConfig, replica: int) -> dict:
    """Execute one replica and return its serialized artifacts.

    The replica's substream seed is mix(master_seed, replica); outputs are
    independent of execution order.
    """
    seed = replica_seed(config.seed, replica)
    schedule = StepSchedule.from_dict(config.schedule)
    algorithm = config.algorithm
    coverage_mode = "mean"
    greedy_fields = {}

    if algorithm in ("pd_bandit", "pd_bandit_projected"):
        world, bcfg, c_star, bench = _bandit_setup(config, seed)
        sim = drive_bandit(bcfg, schedule, world, config.T)
        bench["lambda_cap"] = bcfg.lambda_cap
    elif algorithm == "primal_threshold":
        if config.environment["kind"] != "score_uniform":
            raise ValueError("primal_threshold expects the score_uniform environment")
        world = envs.uniform_score_world(seed)
        tau_star, c_val = oracles.threshold_benchmark(
            world.expected_reward, lambda tau: tau, config.phi,
            world.tau_min, world.tau_max,
        )
        c_star = c_val
        bench = {"benchmark": "threshold_root", "tau_star": tau_star, "c_star": c_val}
        tcfg = ThresholdConfig(world.tau_min, world.tau_max, config.phi, schedule)
        sim = drive_threshold(tcfg, world, config.T)
    elif algorithm == "newsvendor":
        envd = config.environment
        if envd["kind"] != "poisson_demand":
            raise ValueError("newsvendor expects the poisson_demand environment")
        stream = envs.PoissonDemand(envd["before"], envd["after"], envd["shift_t"],
                                    envd["cap"], seed)
        cap = int(envd["cap"])
        q1, mu1 = oracles.newsvendor_benchmark(
            oracles.truncated_poisson_pmf(envd["before"], cap), config.phi)
        q2, mu2 = oracles.newsvendor_benchmark(
            oracles.truncated_poisson_pmf(envd["after"], cap), config.phi)
        c_star = np.where(np.arange(1, config.T + 1) <= envd["shift_t"], q1, q2)
        bench = {
            "benchmark": "phase_base_stock",
            "q_star_before": q1,
            "q_star_after": q2,
            "mu_before": mu1,
            "mu_after": mu2,
        }
        ncfg = NewsvendorConfig(
            demand_cap=envd["cap"],
            phi=config.phi,
            schedule=schedule,
            dynamic_carryover=bool(config.algorithm_params.get("dynamic_carryover", False)),
        )
        sim = drive_newsvendor(
            ncfg, stream, config.T,
            q_init=float(config.algorithm_params.get("initial_level", 0.0)),
        )
        coverage_mode = "fill"
    elif algorithm in ("acog_prefix", "acog_position"):
        envd = config.environment
        if envd["kind"] == "or_random":
            p = envs.draw_or_probabilities(envd["n"], envd["p_low"], envd["p_high"], seed)
        elif envd["kind"] == "or_fixed":
            p = [float(x) for x in envd["p"]]
        else:
            raise ValueError("chain algorithms expect an any-success environment")
        world = envs.OrWorld(p, seed)
        report = oracles.greedy_chain(world.value_oracle(), world.n)
        k_star = report.budget_for(config.phi)
        if k_star is None:
            raise oracles.InfeasibleBenchmarkError(
                f"greedy-chain benchmark infeasible: full-set value "
                f"{report.prefix_values[-1]:.4f} below phi={config.phi}"
            )
        c_star = float(k_star)
        bench = {
            "benchmark": "greedy_budget",
            "k_star": k_star,
            "gap_delta": report.gap_delta,
            "degenerate_margin": report.is_degenerate(config.phi),
            "p": list(p),
            "greedy_chain": list(report.chain),
            "prefix_values": list(report.prefix_values),
        }
        ccfg = ChainConfig(n=world.n, phi=config.phi, horizon_T=config.T)
        variant = PREFIX_KEYED if algorithm == "acog_prefix" else POSITION_KEYED
        sim = drive_acog(ccfg, schedule, world, config.T, variant=variant)
        sim.info.pop("stats", None)
        greedy_fields = {
            "greedy_deviation_steps": mt.deviation_counter(sim.records, report),
            "greedy_deviation_steps_ordered": mt.deviation_counter(
                sim.records, report, order_sensitive=True),
            "steps_above_k_star_plus_1": sum(1 for r in sim.records if r.k > k_star + 1),
            "late_steps_above_k_star_plus_1": sum(
                1 for r in sim.records if r.k > k_star + 1 and r.t > config.T // 2),
        }
    else:  # pragma: no cover - guarded by ExperimentConfig validation
        raise ValueError(f"unhandled algorithm {algorithm}")

    csv_text = render_csv(sim.records, c_star, coverage_mode)
    if coverage_mode == "fill":
        served = np.cumsum([r.extras["y"] for r in sim.records])
        asked = np.cumsum([r.extras["a"] for r in sim.records])
        coverage = served / asked
    else:
        coverage = mt.coverage_series(sim.records)
    report = mt.MetricsReport(
        coverage_cum=coverage,
        coverage_final=float(coverage[-1]),
        regret_cum=mt.regret_series(sim.records, c_star),
        regret_pos_cum=mt.regret_series(sim.records, c_star, positive_part=True),
        boundary_steps=sum(int(r.extras.get("boundary", 0.0))
                           for r in sim.records if r.extras),
        greedy_deviation_steps=greedy_fields.get("greedy_deviation_steps"),
        greedy_deviation_steps_ordered=greedy_fields.get("greedy_deviation_steps_ordered"),
        extras={k: v for k, v in greedy_fields.items()
                if not k.startswith("greedy_deviation")},
    )
    summary = {
        "replica": replica,
        "substream_seed": seed,
        "final_state": sim.final_state,
        **report.summary(),
    }
    for key in ("ledger_residual", "fill_rate", "window_coverage", "window_len"):
        if key in sim.info:
            summary[key] = sim.info[key]
    return {"replica": replica, "csv": csv_text, "summary": summary, "benchmark": bench}


def _worker(args) -> dict:
    config_dict, replica = args
    return run_replica(ExperimentConfig.from_dict(config_dict), replica)


def execute_variant(config: ExperimentConfig, out_dir: Path, jobs: int = 1,
                    plot: bool = False) -> dict:
    """Run every replica of one resolved config and write its artifacts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(config.to_json() + "\n")
    tasks = [(config.to_dict(), k) for k in range(config.replicas)]
    if jobs > 1 and config.replicas > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_worker, tasks))
    else:
        outputs = [_worker(t) for t in tasks]
    outputs.sort(key=lambda o: o["replica"])
    for out in outputs:
        (out_dir / f"trace_{out['replica']}.csv").write_text(out["csv"])
    summaries = [o["summary"] for o in outputs]
    aggregate = _aggregate(summaries)
    metrics_doc = {
        "preset": config.preset,
        "variant": config.variant,
        "algorithm": config.algorithm,
        "T": config.T,
        "phi": config.phi,
        "benchmark": outputs[0]["benchmark"],
        "replicas": [
            {**o["summary"], "benchmark": o["benchmark"]} for o in outputs
        ],
        "aggregate": aggregate,
    }
    (out_dir / "metrics.json").write_text(json.dumps(metrics_doc, indent=2, sort_keys=True) + "\n")
    if plot:
        from .svgplot import plot_trace_csv

        plot_trace_csv(outputs[0]["csv"], out_dir, config.phi)
    return metrics_doc


def _aggregate(summaries: list[dict]) -> dict:
    keys = ("coverage_final", "regret_final", "regret_pos_final", "fill_rate",
            "steps_above_k_star_plus_1", "late_steps_above_k_star_plus_1")
    agg: dict = {"replicas": len(summaries)}
    for key in keys:
        vals = [s[key] for s in summaries if key in s]
        if not vals:
            continue
        arr = np.asarray(vals, dtype=float)
        agg[f"{key}_mean"] = float(arr.mean())
        if arr.size > 1:
            agg[f"{key}_stderr"] = float(arr.std(ddof=1) / math.sqrt(arr.size))
    return agg


def execute(config: ExperimentConfig, out_dir: Path, jobs: int = 1,
            plot: bool = False) -> dict:
    """Run a config (expanding sweep presets) and write all artifacts.

    Returns a manifest of the metric documents, one per variant.
    """
    out_dir = Path(out_dir)
    variants = expand_variants(config)
    docs = []
    if len(variants) == 1:
        docs.append(execute_variant(variants[0], out_dir, jobs=jobs, plot=plot))
    else:
        for var in variants:
            docs.append(execute_variant(var, out_dir / var.variant, jobs=jobs, plot=plot))
        manifest = {"preset": config.preset, "variants": [v.variant for v in variants]}
        if config.preset == "regret-scaling":
            # positive-part regret: the per-sequence cost overshoot that the
            # threshold setting's rate statement is about
            pts = [(d["T"], d["aggregate"]["regret_pos_final_mean"]) for d in docs]
            fit = mt.sublinearity_fit(pts)
            manifest["slope_fit"] = {
                "slope": fit.slope,
                "intercept": fit.intercept,
                "r2": fit.r2,
                "clipped": fit.clipped,
                "points": [{"T": t, "regret_mean": r} for t, r in pts],
            }
        (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return {"variants": docs}


def benchmark_values(config: ExperimentConfig) -> dict:
    """Benchmark values per variant for replica 0, without running anything."""
    out = {}
    for var in expand_variants(config):
        seed = replica_seed(var.seed, 0)
        if var.algorithm in ("pd_bandit", "pd_bandit_projected"):
            _, _, _, bench = _bandit_setup(var, seed)
        elif var.algorithm == "primal_threshold":
            world = envs.uniform_score_world(seed)
            tau_star, c_val = oracles.threshold_benchmark(
                world.expected_reward, lambda tau: tau, var.phi,
                world.tau_min, world.tau_max)
            bench = {"benchmark": "threshold_root", "tau_star": tau_star, "c_star": c_val}
        elif var.algorithm == "newsvendor":
            envd = var.environment
            cap = int(envd["cap"])
            q1, mu1 = oracles.newsvendor_benchmark(
                oracles.truncated_poisson_pmf(envd["before"], cap), var.phi)
            q2, mu2 = oracles.newsvendor_benchmark(
                oracles.truncated_poisson_pmf(envd["after"], cap), var.phi)
            bench = {"benchmark": "phase_base_stock", "q_star_before": q1,
                     "q_star_after": q2, "mu_before": mu1, "mu_after": mu2}
        else:
            envd = var.environment
            if envd["kind"] == "or_random":
                p = envs.draw_or_probabilities(envd["n"], envd["p_low"], envd["p_high"], seed)
            else:
                p = [float(x) for x in envd["p"]]
            report = oracles.greedy_chain(envs.OrWorld(p, seed).value_oracle(), len(p))
            bench = {
                "benchmark": "greedy_budget",
                "k_star": report.budget_for(var.phi),
                "gap_delta": report.gap_delta,
                "p": list(p),
                "greedy_chain": list(report.chain),
                "prefix_values": list(report.prefix_values),
            }
        out[var.variant or "run"] = bench
    return out
