"""Command-line interface.

Subcommands:
  gen       write a synthetic city + driver cohort scenario directory
  ingest    trip log -> stop events CSV
  graph     trip log -> habitual trip graph CSV pair
  predict   trip log -> sliding-window CV report and gate verdict
  plan      scenario config -> one refuel plan (CSV + GeoJSON)
  simulate  scenario config -> cohort comparison report

Exit codes: 0 success, 2 validation error (bad input or config), 1 runtime
error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

from . import errors, harness, mileage, scenario as scenario_mod
from .optimizer import MODES, Mode, export_plan_csv, export_plan_geojson, generate_candidates, select_stop
from .roadgraph import BuiltinRouter
from .telemetry import detect_halts, integrate_daily_distance, load_trip_log
from .tripgraph import assign_clusters, build_daily_flows, export_graph_csv, select_pois


def _mode_from_args(args) -> Mode:
    if args.mode == "custom":
        if args.k1 is None or args.k2 is None:
            raise errors.SchemaError("--mode custom requires --k1 and --k2")
        return Mode(name="custom", k_cost=args.k1, k_time=args.k2)
    return MODES[args.mode]


def _add_mode_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=["fuel", "balanced", "time", "custom"],
                   default=None, help="preference preset (default: scenario config)")
    p.add_argument("--k1", type=float, default=None, help="cost weight for --mode custom")
    p.add_argument("--k2", type=float, default=None, help="time weight for --mode custom")


def cmd_gen(args) -> int:
    config = scenario_mod.generate_scenario_dir(
        args.out_dir, seed=args.seed, n_seeds_per_profile=args.seeds_per_profile,
        station_count=args.stations, observation_weeks=args.weeks)
    print(f"wrote scenario config to {config}")
    return 0


def cmd_ingest(args) -> int:
    trace, samples = load_trip_log(args.log)
    events = detect_halts(trace, samples, gap_threshold=args.gap_threshold)
    out = Path(args.out_dir) / "stops.csv"
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["timestamp", "date", "lat", "lon"])
        for ev in events:
            writer.writerow([repr(ev.timestamp), ev.day.isoformat(),
                             repr(ev.lat), repr(ev.lon)])
    print(f"{len(events)} stop events -> {out}")
    return 0


def cmd_graph(args) -> int:
    trace, samples = load_trip_log(args.log)
    events = detect_halts(trace, samples, gap_threshold=args.gap_threshold)
    clusters = assign_clusters(events, cluster_radius_m=args.cluster_radius)
    pois, all_nodes = select_pois(clusters, args.weeks)
    graph = build_daily_flows(pois, events)
    nodes_path = Path(args.out_dir) / "nodes.csv"
    edges_path = Path(args.out_dir) / "edges.csv"
    export_graph_csv(all_nodes, graph, str(nodes_path), str(edges_path))
    n_edges = sum(len(es) for es in graph.edges.values())
    print(f"{len(pois)} habitual destinations, {n_edges} edges "
          f"-> {nodes_path}, {edges_path}")
    return 0


def cmd_predict(args) -> int:
    _trace, samples = load_trip_log(args.log)
    daily_km = integrate_daily_distance(samples)
    if daily_km:
        lo, hi = min(daily_km), max(daily_km)
        for i in range((hi - lo).days + 1):
            from datetime import timedelta
            daily_km.setdefault(lo + timedelta(days=i), 0.0)
    rows = mileage.build_features(daily_km)
    report = mileage.sliding_cv(rows, window_weeks=args.window, seed=args.seed)
    out = Path(args.out_dir) / "cv_metrics.csv"
    mileage.export_metrics_csv(report.folds, str(out))
    verdict = "accepted" if mileage.gate(report.folds[-1]) else "rejected"
    print(f"{len(report.folds)} folds; mean MAE {report.mean.mae:.2f} km/day, "
          f"mean E_week {report.mean.e_week:.2f} km, "
          f"mean E_week% {report.mean.e_week_pct:.1f}")
    print(f"gate verdict on most recent week: {verdict}")
    print(f"per-fold metrics -> {out}")
    return 0


def cmd_plan(args) -> int:
    scenarios = scenario_mod.load_scenarios(args.config)
    if args.driver:
        matching = [s for s in scenarios if s.name == args.driver]
        if not matching:
            raise errors.SchemaError(f"no driver named {args.driver!r} in config")
        scn = matching[0]
    else:
        scn = scenarios[0]
    if args.mode:
        scn = replace(scn, mode=_mode_from_args(args))
    if args.seed is not None:
        scn = replace(scn, seed=args.seed)
    ctx = harness.build_context(scn)
    router = BuiltinRouter(scn.graph)
    candidates = generate_candidates(
        router, ctx.day_route, scn.graph, ctx.departure_node,
        list(ctx.remaining_nodes), scn.stations, ctx.day_prices,
        delta_km=ctx.delta_km, corridor_radius_m=scn.corridor_radius_m)
    plan = select_stop(candidates, scn.vehicle, scn.mode, day=ctx.day,
                       refuel_duration_s=scn.refuel_duration_s)
    out_csv = Path(args.out_dir) / "plan.csv"
    out_geojson = Path(args.out_dir) / "plan.geojson"
    export_plan_csv(plan, str(out_csv))
    export_plan_geojson(plan, candidates, scn.graph, str(out_geojson))
    print(f"{scn.name}: refuel {plan.stop.station.station_id} on {ctx.day} "
          f"({plan.cost_eur:.2f} EUR, {plan.time_min:.2f} min incl. day route)"
          f" -> {out_csv}, {out_geojson}")
    return 0


def cmd_simulate(args) -> int:
    scenarios = scenario_mod.load_scenarios(args.config)
    if args.seed is not None:
        scenarios = [replace(s, seed=args.seed) for s in scenarios]
    modes = (_mode_from_args(args),) if args.mode else None
    report = harness.run_cohort(scenarios, modes=modes, jobs=args.jobs)
    out_dir = Path(args.out_dir)
    harness.write_per_run_csv(report, str(out_dir / "per_run.csv"))
    harness.write_report_csv(report, str(out_dir / "report.csv"))
    print(f"{'strategy':<16} {'mode':<15} {'cost [EUR]':>14} {'time [min]':>14} runs failed")
    for r in report.rows:
        print(f"{r.strategy:<16} {r.mode:<15} "
              f"{r.cost_mean:8.2f} ± {r.cost_std:4.2f} "
              f"{r.time_mean:8.2f} ± {r.time_std:4.2f} {r.n_runs:4d} {r.n_failed:6d}")
    print(f"reports -> {out_dir / 'report.csv'}, {out_dir / 'per_run.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="refuelopt",
                                     description="Habit-aware refueling planner")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic scenario directory")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stations", type=int, default=10)
    p.add_argument("--weeks", type=int, default=7)
    p.add_argument("--seeds-per-profile", type=int, default=5)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("ingest", help="trip log -> stop events")
    p.add_argument("--log", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--gap-threshold", type=float, default=120.0)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("graph", help="trip log -> habitual trip graph CSVs")
    p.add_argument("--log", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--weeks", type=int, required=True,
                   help="observation weeks covered by the log")
    p.add_argument("--gap-threshold", type=float, default=120.0)
    p.add_argument("--cluster-radius", type=float, default=100.0)
    p.set_defaults(fn=cmd_graph)

    p = sub.add_parser("predict", help="sliding-window CV report and gate verdict")
    p.add_argument("--log", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--window", type=int, default=6, help="training window in weeks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("plan", help="one refuel plan from a scenario config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--driver", default=None, help="driver name (default: first)")
    p.add_argument("--seed", type=int, default=None)
    _add_mode_flags(p)
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("simulate", help="cohort comparison of strategies")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    _add_mode_flags(p)
    p.set_defaults(fn=cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)
        return args.fn(args)
    except (errors.SchemaError, errors.ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except errors.RefuelOptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
