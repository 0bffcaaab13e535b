import csv
from dataclasses import replace

import pytest

from refuelopt import errors
from refuelopt.cli import main
from refuelopt.harness import (STRATEGIES, build_context, run_cohort,
                               run_scenario, write_per_run_csv,
                               write_report_csv)
from refuelopt.optimizer import MODES
from refuelopt.scenario import (PROFILE_TEMPLATES, load_scenarios, make_profile,
                                make_station_catalog, parse_mode)
from refuelopt.telemetry import generate_synthetic_log, save_trip_log


@pytest.fixture(scope="module")
def cohort(demo_scenario_config):
    return load_scenarios(demo_scenario_config)


@pytest.fixture(scope="module")
def trip_log_path(tmp_path_factory, cohort):
    p = tmp_path_factory.mktemp("logs") / "log.csv"
    scn = cohort[0]
    trace, samples, _ = generate_synthetic_log(scn.profile, weeks=8)
    save_trip_log(str(p), trace, samples)
    return str(p)


# --- scenario config ------------------------------------------------------------

def test_load_scenarios_shapes(cohort):
    assert len(cohort) == len(PROFILE_TEMPLATES)
    scn = cohort[0]
    assert scn.vehicle.tank_l == 50.0
    assert scn.mode.name == "balanced"
    assert scn.departure in scn.profile.anchors
    assert len(scn.stations) == 10


def test_parse_mode_presets_and_custom():
    assert parse_mode("fuel") is MODES["fuel"]
    m = parse_mode({"k_cost": 2.0, "k_time": 0.5})
    assert (m.k_cost, m.k_time) == (2.0, 0.5)
    with pytest.raises(errors.SchemaError):
        parse_mode("warp")


def test_make_profile_deterministic(city):
    a = make_profile("commuter", 7, city)
    b = make_profile("commuter", 7, city)
    c = make_profile("commuter", 8, city)
    assert a == b
    assert a.anchors != c.anchors
    with pytest.raises(ValueError):
        make_profile("aviator", 7, city)


def test_station_catalog_price_spread(city):
    stations, history = make_station_catalog(seed=1, graph=city, count=12)
    assert len(stations) == 12
    latest = [s.prices["petrol"][1] for s in stations]
    spread = (max(latest) - min(latest)) / (sum(latest) / len(latest))
    assert spread >= 0.02  # per-station bases differ by design
    assert all(len(obs) == 28 for obs in history.series.values())


def test_load_scenarios_rejects_broken_config(tmp_path, demo_scenario_config):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("city: {nodes: missing.csv, edges: missing.csv}\n")
    with pytest.raises((errors.SchemaError, errors.IoError)):
        load_scenarios(str(cfg))


# --- harness --------------------------------------------------------------------

def test_build_context_is_reproducible(cohort):
    a = build_context(cohort[0])
    b = build_context(cohort[0])
    assert a.context_hash == b.context_hash
    assert a.day == b.day
    assert a.day_prices == b.day_prices
    assert a.delta_km == b.delta_km


def test_run_scenario_produces_all_strategies(cohort):
    outcomes = run_scenario(cohort[0])
    assert [o.strategy for o in outcomes] == list(STRATEGIES)
    ok = [o for o in outcomes if o.error is None]
    assert len(ok) == 3
    assert len({o.context_hash for o in ok}) == 1  # shared context
    assert all(o.cost_eur > 0 for o in ok)


def test_time_is_detour_overhead(cohort):
    outcomes = {o.strategy: o for o in run_scenario(cohort[0])}
    ra = outcomes["route_aware"]
    assert ra.error is None
    # Overhead includes the fixed refueling duration (5 min), so >= 5 min.
    assert ra.time_min >= cohort[0].refuel_duration_s / 60.0 - 1e-9


def test_cohort_aggregate_counts(cohort):
    report = run_cohort(cohort)
    assert len(report.outcomes) == len(cohort) * len(STRATEGIES)
    for row in report.rows:
        assert row.n_runs + row.n_failed == len(cohort)
    assert {r.strategy for r in report.rows} == set(STRATEGIES)
    with pytest.raises(ValueError):
        run_cohort([])


def test_parallel_equals_sequential(cohort):
    seq = run_cohort(cohort, jobs=1)
    par = run_cohort(cohort, jobs=2)
    assert par.outcomes == seq.outcomes
    assert par.rows == seq.rows


def test_failed_scenario_becomes_error_rows(cohort):
    # An undriveable vehicle (tiny range) makes every strategy fail.
    scn = replace(cohort[0], vehicle=replace(cohort[0].vehicle, fuel_l=0.01))
    outcomes = run_scenario(scn)
    assert all(o.error for o in outcomes)
    report = run_cohort([scn])
    assert all(r.n_failed == 1 and r.n_runs == 0 for r in report.rows)


def test_report_csv_layout(cohort, tmp_path):
    report = run_cohort(cohort)
    rp, pp = tmp_path / "report.csv", tmp_path / "per_run.csv"
    write_report_csv(report, str(rp))
    write_per_run_csv(report, str(pp))
    rows = list(csv.reader(rp.open()))
    assert rows[0] == ["strategy", "mode", "K1", "K2", "cost_mean", "cost_std",
                       "time_mean", "time_std", "n_runs", "n_failed"]
    assert len(rows) == 1 + len(report.rows)
    runs = list(csv.reader(pp.open()))
    assert runs[0][:5] == ["scenario", "strategy", "mode", "K1", "K2"]
    assert len(runs) == 1 + len(report.outcomes)


# --- CLI ------------------------------------------------------------------------

def test_cli_gen_and_simulate_round_trip(tmp_path, capsys):
    gen_dir = tmp_path / "scn"
    assert main(["gen", "--out-dir", str(gen_dir), "--seed", "3",
                 "--seeds-per-profile", "1"]) == 0
    out_dir = tmp_path / "sim"
    assert main(["simulate", "--config", str(gen_dir / "scenario.yaml"),
                 "--out-dir", str(out_dir)]) == 0
    assert (out_dir / "report.csv").exists()
    assert (out_dir / "per_run.csv").exists()
    printed = capsys.readouterr().out
    for strategy in STRATEGIES:
        assert strategy in printed


def test_cli_simulate_seed_is_byte_deterministic(demo_scenario_config, tmp_path):
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        assert main(["simulate", "--config", demo_scenario_config,
                     "--out-dir", str(d), "--seed", "11"]) == 0
        outs.append(((d / "report.csv").read_bytes(), (d / "per_run.csv").read_bytes()))
    assert outs[0] == outs[1]


def test_cli_plan_writes_csv_and_geojson(demo_scenario_config, tmp_path, capsys):
    out = tmp_path / "plan"
    assert main(["plan", "--config", demo_scenario_config,
                 "--out-dir", str(out), "--mode", "fuel"]) == 0
    rows = list(csv.reader((out / "plan.csv").open()))
    assert rows[0] == ["day", "station_id", "lat", "lon", "price_eur_l",
                       "C_eur", "T_min", "L", "mode"]
    assert (out / "plan.geojson").exists()


def test_cli_custom_mode_requires_weights(demo_scenario_config, tmp_path, capsys):
    out = tmp_path / "plan"
    assert main(["plan", "--config", demo_scenario_config,
                 "--out-dir", str(out), "--mode", "custom"]) == 2
    assert main(["plan", "--config", demo_scenario_config,
                 "--out-dir", str(out), "--mode", "custom",
                 "--k1", "1", "--k2", "4"]) == 0


def test_cli_ingest_graph_predict(trip_log_path, tmp_path, capsys):
    out = tmp_path / "pipeline"
    assert main(["ingest", "--log", trip_log_path, "--out-dir", str(out)]) == 0
    assert (out / "stops.csv").exists()
    assert main(["graph", "--log", trip_log_path, "--out-dir", str(out),
                 "--weeks", "8"]) == 0
    assert (out / "nodes.csv").exists() and (out / "edges.csv").exists()
    assert main(["predict", "--log", trip_log_path, "--out-dir", str(out),
                 "--window", "4", "--seed", "0"]) == 0
    assert (out / "cv_metrics.csv").exists()
    assert "gate verdict" in capsys.readouterr().out


def test_cli_validation_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("nonsense\n")
    assert main(["ingest", "--log", str(bad), "--out-dir", str(tmp_path)]) == 2
    assert main(["simulate", "--config", str(tmp_path / "none.yaml"),
                 "--out-dir", str(tmp_path)]) == 1
    assert main(["bogus-command"]) == 2
