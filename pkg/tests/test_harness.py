import json

import pytest

from coverctl.cli import main
from coverctl.presets import (
    ConfigError,
    ExperimentConfig,
    expand_variants,
    preset_catalog,
    preset_config,
)
from coverctl.runner import execute, render_csv, run_replica
from coverctl.metrics import TraceRecord

EXPECTED_PRESETS = {
    "interval-beta",
    "interval-eta-sweep",
    "adversarial-shift",
    "threshold-primal",
    "threshold-decay",
    "newsvendor-shift",
    "combinatorial-or",
    "regret-scaling",
}


def small_config(**overrides):
    base = dict(
        preset="custom",
        algorithm="newsvendor",
        environment={"kind": "poisson_demand", "before": 20.0, "after": 50.0,
                     "shift_t": 25, "cap": 100.0},
        T=50,
        phi=0.9,
        schedule={"kind": "power", "c": 5.0, "p": 0.5, "index_offset": 1},
        seed=5,
        replicas=2,
    )
    base.update(overrides)
    return ExperimentConfig.from_dict(base)


def test_catalog_contains_exactly_the_presets():
    assert {p["name"] for p in preset_catalog()} == EXPECTED_PRESETS


def test_preset_configs_round_trip():
    for name in EXPECTED_PRESETS:
        cfg = preset_config(name, seed=3)
        assert ExperimentConfig.from_dict(json.loads(cfg.to_json())) == cfg


def test_unknown_preset_rejected():
    with pytest.raises(ConfigError):
        preset_config("no-such-preset")


def test_config_validation_messages():
    with pytest.raises(ConfigError, match="algorithm"):
        ExperimentConfig.from_dict({
            "algorithm": "made_up", "environment": {"kind": "trap"},
            "T": 10, "phi": 0.5, "schedule": {"kind": "constant", "c": 0.1}, "seed": 1,
        })
    with pytest.raises(ConfigError, match="unknown config keys"):
        ExperimentConfig.from_dict({
            "algorithm": "newsvendor", "environment": {"kind": "poisson_demand"},
            "T": 10, "phi": 0.5, "schedule": {}, "seed": 1, "bogus": 3,
        })
    with pytest.raises(ConfigError, match="missing config keys"):
        ExperimentConfig.from_dict({"algorithm": "newsvendor"})


def test_variant_expansion_counts():
    assert len(expand_variants(preset_config("interval-beta"))) == 1
    assert len(expand_variants(preset_config("interval-eta-sweep"))) == 3
    assert len(expand_variants(preset_config("adversarial-shift"))) == 2
    assert len(expand_variants(preset_config("threshold-decay"))) == 3
    assert len(expand_variants(preset_config("regret-scaling"))) == 5
    etas = [v.schedule["c"] for v in expand_variants(preset_config("interval-eta-sweep"))]
    assert etas == [0.01, 0.05, 0.2]


def test_csv_schema_and_round_trip_precision():
    records = [
        TraceRecord(t=1, action=3, reward=1.0, cost=1 / 3, state=0.1,
                    extras={"boundary": 0.0}),
        TraceRecord(t=2, action=5, reward=0.0, cost=2 / 7, state=-0.05,
                    extras={"boundary": 1.0}),
    ]
    csv_text = render_csv(records, c_star=0.25)
    lines = csv_text.strip().split("\n")
    assert lines[0] == "t,action,reward,cost,state,K,coverage_cum,regret_cum,regret_pos_cum,boundary"
    cost_back = float(lines[1].split(",")[3])
    assert cost_back == 1 / 3  # 17 significant digits round-trip exactly


def test_execute_writes_artifacts_and_is_deterministic(tmp_path):
    cfg = small_config()
    execute(cfg, tmp_path / "a", jobs=1, plot=True)
    execute(cfg, tmp_path / "b", jobs=1)
    execute(cfg, tmp_path / "c", jobs=2)
    names = {p.name for p in (tmp_path / "a").iterdir()}
    assert {"config.json", "trace_0.csv", "trace_1.csv", "metrics.json",
            "coverage.svg", "regret.svg"} <= names
    for k in range(cfg.replicas):
        a = (tmp_path / "a" / f"trace_{k}.csv").read_bytes()
        assert a == (tmp_path / "b" / f"trace_{k}.csv").read_bytes()
        assert a == (tmp_path / "c" / f"trace_{k}.csv").read_bytes()


def test_effective_config_reproduces_run(tmp_path):
    cfg = small_config()
    execute(cfg, tmp_path / "orig", jobs=1)
    effective = json.loads((tmp_path / "orig" / "config.json").read_text())
    execute(ExperimentConfig.from_dict(effective), tmp_path / "redo", jobs=1)
    assert ((tmp_path / "orig" / "trace_0.csv").read_bytes()
            == (tmp_path / "redo" / "trace_0.csv").read_bytes())


def test_multi_variant_layout(tmp_path):
    cfg = preset_config("threshold-decay", seed=2).replace(T=400, replicas=1)
    execute(cfg, tmp_path, jobs=1)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["variants"] == ["p-0.3", "p-0.5", "p-0.7"]
    for label in manifest["variants"]:
        assert (tmp_path / label / "trace_0.csv").exists()
        assert (tmp_path / label / "metrics.json").exists()


def test_metrics_document_shape():
    out = run_replica(small_config(), 0)
    assert set(out["summary"]) >= {"replica", "coverage_final", "regret_final",
                                   "regret_pos_final", "fill_rate"}
    doc_keys = {"benchmark", "q_star_before", "q_star_after", "mu_before", "mu_after"}
    assert doc_keys <= set(out["benchmark"])


def test_newsvendor_trace_extra_columns():
    out = run_replica(small_config(replicas=1), 0)
    header = out["csv"].split("\n", 1)[0].split(",")
    assert header[-3:] == ["a", "leftover", "y"]


def test_chain_trace_has_budget_column():
    for algorithm in ("acog_position", "acog_prefix"):
        cfg = ExperimentConfig.from_dict(dict(
            algorithm=algorithm,
            environment={"kind": "or_fixed", "p": [0.6, 0.5, 0.4]},
            T=60, phi=0.6,
            schedule={"kind": "constant", "c": 0.2}, seed=2,
        ))
        out = run_replica(cfg, 0)
        lines = out["csv"].strip().split("\n")
        k_col = lines[0].split(",").index("K")
        assert {int(line.split(",")[k_col]) for line in lines[1:]} <= {0, 1, 2, 3}
        assert out["benchmark"]["k_star"] == 1  # the 0.6 arm alone meets the target


def test_cli_list_and_oracle(capsys):
    assert main(["list-presets"]) == 0
    listed = capsys.readouterr().out
    for name in EXPECTED_PRESETS:
        assert name in listed
    assert main(["oracle", "--preset", "threshold-primal"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["run"]["c_star"] == pytest.approx(0.8, abs=1e-6)


def test_every_preset_executes_end_to_end(tmp_path):
    # reduced horizons/replicas: exercises every environment builder,
    # driver, benchmark, and artifact writer the catalog can reach
    import math

    for name in sorted(EXPECTED_PRESETS):
        cfg = preset_config(name, seed=2, replicas=1)
        small_T = min(cfg.T, 2000)
        overrides = {"T": small_T}
        if cfg.schedule["kind"] == "constant" and name.startswith(("interval", "adversarial")):
            overrides["schedule"] = {"kind": "constant",
                                     "c": 2.0 / math.sqrt(small_T),
                                     "p": 0.0, "index_offset": 0}
        cfg = cfg.replace(**overrides)
        out = tmp_path / name
        execute(cfg, out, jobs=1)
        variants = expand_variants(cfg)
        if len(variants) == 1:
            assert (out / "trace_0.csv").exists() and (out / "metrics.json").exists()
        else:
            assert (out / "manifest.json").exists()
            for var in variants:
                assert (out / var.variant / "trace_0.csv").exists()


def test_oracle_values_available_for_every_preset():
    from coverctl.runner import benchmark_values

    for name in sorted(EXPECTED_PRESETS):
        values = benchmark_values(preset_config(name, seed=2))
        assert values
        for bench in values.values():
            assert "benchmark" in bench


def test_cli_oracle_from_config_file(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(small_config().to_json())
    assert main(["oracle", "--config", str(cfg_path)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["run"]["benchmark"] == "phase_base_stock"


def test_cli_run_and_config_override(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(small_config(replicas=1).to_json())
    out_dir = tmp_path / "out"
    assert main(["run", "--config", str(cfg_path), "--out", str(out_dir),
                 "--seed", "9"]) == 0
    capsys.readouterr()
    written = json.loads((out_dir / "config.json").read_text())
    assert written["seed"] == 9


def test_cli_rejects_bad_config_with_location(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"algorithm": ')
    assert main(["run", "--config", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "bad.json:1:" in err


def test_cli_requires_exactly_one_source(capsys):
    assert main(["run"]) == 2
    assert main(["run", "--preset", "interval-beta", "--config", "x.json"]) == 2


def test_cli_reports_infeasible_benchmark(tmp_path, capsys):
    cfg = ExperimentConfig.from_dict(dict(
        algorithm="acog_position",
        environment={"kind": "or_fixed", "p": [0.1, 0.1]},
        T=20, phi=0.8,
        schedule={"kind": "constant", "c": 0.1}, seed=1,
    ))
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 3
    assert "infeasible" in capsys.readouterr().err


def test_svg_plots_are_self_contained(tmp_path):
    execute(small_config(replicas=1), tmp_path, jobs=1, plot=True)
    svg = (tmp_path / "coverage.svg").read_text()
    assert svg.startswith("<svg")
    assert "polyline" in svg and "</svg>" in svg
