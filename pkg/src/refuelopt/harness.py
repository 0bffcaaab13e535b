"""Multi-week simulation harness comparing refueling strategies.

Three strategies are replayed against the same per-scenario context (same
visited locations, same price snapshot, same vehicle), so differences come
only from how each picks its station:

  nearest          stop at the station closest to the departure point,
                   ignoring prices;
  cheapest_nearby  stop at the cheapest station within a fixed radius of
                   the departure point, ignoring the day's onward path;
  route_aware      the full pipeline: habitual day route, price-forecast
                   cheapest day, corridor candidates and weighted
                   cost/time selection.
"""

from __future__ import annotations

import csv
import hashlib
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from datetime import date

from . import errors
from .geo import haversine_m
from .mileage import (build_features, evaluate_metrics, extra_mileage_delta,
                      fit_forest, forecast_next_week, gate, predict_week)
from .optimizer import (CandidateStop, Mode, RefuelPlan, fuel_cost,
                        generate_candidates, select_stop, time_cost)
from .roadgraph import BuiltinRouter, Route
from .scenario import OBSERVATION_START, Scenario
from .stations import Station, forecast_week
from .telemetry import (WEEKDAYS, detect_halts, generate_synthetic_log,
                        integrate_daily_distance)
from .tripgraph import assign_clusters, build_daily_flows, select_pois

STRATEGIES = ("nearest", "cheapest_nearby", "route_aware")

PER_RUN_HEADER = ["scenario", "strategy", "mode", "K1", "K2", "day",
                  "station_id", "cost_eur", "time_min", "gate_accepted",
                  "delta_km", "context_hash", "error"]
REPORT_HEADER = ["strategy", "mode", "K1", "K2", "cost_mean", "cost_std",
                 "time_mean", "time_std", "n_runs", "n_failed"]


@dataclass(frozen=True)
class ScenarioContext:
    """Everything the strategies share within one scenario run."""

    scenario: Scenario
    day: str
    day_route: Route
    departure_node: str
    departure_coords: tuple[float, float]
    remaining_nodes: tuple[str, ...]
    day_prices: dict[str, float]
    delta_km: float
    gate_accepted: bool
    context_hash: str


@dataclass(frozen=True)
class Outcome:
    scenario: str
    strategy: str
    mode: str
    k_cost: float
    k_time: float
    day: str = ""
    station_id: str = ""
    cost_eur: float = 0.0
    time_min: float = 0.0
    gate_accepted: bool = False
    delta_km: float = 0.0
    context_hash: str = ""
    error: str | None = None


@dataclass(frozen=True)
class ReportRow:
    strategy: str
    mode: str
    k_cost: float
    k_time: float
    cost_mean: float
    cost_std: float
    time_mean: float
    time_std: float
    n_runs: int
    n_failed: int


@dataclass(frozen=True)
class AggregateReport:
    rows: tuple[ReportRow, ...]
    outcomes: tuple[Outcome, ...]


def build_context(scn: Scenario) -> ScenarioContext:
    """Replay the scenario's observation period and fix the shared context."""
    trace, samples, _truth = generate_synthetic_log(scn.profile, scn.observation_weeks,
                                                    start_day=OBSERVATION_START)
    halts = detect_halts(trace, samples, gap_threshold=scn.gap_threshold_s)
    clusters = assign_clusters(halts, cluster_radius_m=scn.cluster_radius_m)
    pois, _all = select_pois(clusters, scn.observation_weeks)
    trip_graph = build_daily_flows(pois, halts)

    daily_km = integrate_daily_distance(samples)
    for i in range(scn.observation_weeks * 7):
        d = date.fromordinal(OBSERVATION_START.toordinal() + i)
        daily_km.setdefault(d, 0.0)

    rows = build_features(daily_km)
    model = fit_forest(rows[:-7], seed=scn.seed)
    preds = predict_week(model, [replace(r, target=None) for r in rows[-7:]])
    metrics = evaluate_metrics([r.target for r in rows[-7:]], preds)
    accepted = gate(metrics)

    forecast = forecast_week(scn.history, scn.fuel_type)
    graph = scn.graph
    router = BuiltinRouter(graph)

    # Cheapest forecast day, restricted to weekdays with a habitual route:
    # a day without transitions gives the optimizer nothing to work with.
    usable = [wd for wd in WEEKDAYS if trip_graph.edges.get(wd)]
    if not usable:
        raise errors.EmptyDayGraph(f"{scn.name}: no weekday has a habitual route")
    area = forecast.area_prices
    day = min(usable, key=lambda wd: (area[wd], WEEKDAYS.index(wd)))

    dep_coords = scn.profile.anchors[scn.departure]
    dep_node, _ = graph.nearest_node(*dep_coords)
    remaining = tuple(graph.nearest_node(e.dest_lat, e.dest_lon)[0]
                      for e in trip_graph.edges[day])
    day_route = router.one_stop_route(dep_node, remaining[0], list(remaining[1:])) \
        if remaining else None

    delta_km = 0.0
    if accepted:
        full_model = fit_forest(rows, seed=scn.seed)
        next_week = forecast_next_week(full_model, daily_km)
        day_forecast = next(v for d, v in next_week.items()
                            if WEEKDAYS[d.weekday()] == day)
        delta_km = extra_mileage_delta(day_forecast, day_route.distance_km)

    day_prices = {sid: forecast.station_prices[sid][day]
                  for sid in forecast.station_prices}
    digest = hashlib.sha256(repr((
        day, sorted(day_prices.items()), dep_node, remaining,
        day_route.nodes, round(delta_km, 9),
        (scn.vehicle.tank_l, scn.vehicle.fuel_l, scn.vehicle.rate_l_per_km),
    )).encode()).hexdigest()

    return ScenarioContext(scenario=scn, day=day, day_route=day_route,
                           departure_node=dep_node, departure_coords=dep_coords,
                           remaining_nodes=remaining, day_prices=day_prices,
                           delta_km=delta_km, gate_accepted=accepted,
                           context_hash=digest)


def _station_candidate(ctx: ScenarioContext, station: Station) -> CandidateStop:
    router = BuiltinRouter(ctx.scenario.graph)
    node, _ = ctx.scenario.graph.nearest_node(station.lat, station.lon)
    route = router.one_stop_route(ctx.departure_node, node, list(ctx.remaining_nodes))
    return CandidateStop(station=station, route=route,
                         distance_km=route.distance_km,
                         corrected_km=route.distance_km + ctx.delta_km,
                         time_s=route.time_s,
                         price_eur_l=ctx.day_prices[station.station_id])


def _plan_outcome(ctx: ScenarioContext, strategy: str, mode: Mode,
                  plan: RefuelPlan) -> Outcome:
    # Reported time is the detour overhead over the habitual day route,
    # refueling duration included; the full-day driving time is common to
    # every strategy and would only obscure the comparison.
    overhead_min = (plan.stop.time_s - ctx.day_route.time_s
                    + ctx.scenario.refuel_duration_s) / 60.0
    return Outcome(scenario=ctx.scenario.name, strategy=strategy, mode=mode.name,
                   k_cost=mode.k_cost, k_time=mode.k_time, day=ctx.day,
                   station_id=plan.stop.station.station_id,
                   cost_eur=plan.cost_eur, time_min=overhead_min,
                   gate_accepted=ctx.gate_accepted, delta_km=ctx.delta_km,
                   context_hash=ctx.context_hash)


def strategy_nearest(ctx: ScenarioContext, mode: Mode) -> Outcome:
    """Closest station to the departure point, price be damned."""
    scn = ctx.scenario
    order = sorted(scn.stations,
                   key=lambda s: (haversine_m(*ctx.departure_coords, s.lat, s.lon),
                                  s.station_id))
    for st in order:
        if st.station_id not in ctx.day_prices:
            continue
        cand = _station_candidate(ctx, st)
        if cand.reachable(scn.vehicle):
            plan = RefuelPlan(day=ctx.day, stop=cand, mode=mode,
                              cost_eur=fuel_cost(cand, scn.vehicle),
                              time_min=time_cost(cand, scn.refuel_duration_s) / 60.0,
                              objective=0.0)
            return _plan_outcome(ctx, "nearest", mode, plan)
    raise errors.NoReachableStation("no station in fuel range")


def strategy_cheapest_nearby(ctx: ScenarioContext, mode: Mode) -> Outcome:
    """Cheapest station within a fixed radius of the departure point,
    selected without looking at the day's onward path."""
    scn = ctx.scenario
    nearby = [s for s in scn.stations
              if s.station_id in ctx.day_prices
              and haversine_m(*ctx.departure_coords, s.lat, s.lon) <= scn.nearby_radius_m]
    if not nearby:
        raise errors.NoReachableStation(
            f"no station within {scn.nearby_radius_m} m of the departure point")
    order = sorted(nearby, key=lambda s: (
        ctx.day_prices[s.station_id],
        haversine_m(*ctx.departure_coords, s.lat, s.lon), s.station_id))
    for st in order:
        cand = _station_candidate(ctx, st)
        if cand.reachable(scn.vehicle):
            plan = RefuelPlan(day=ctx.day, stop=cand, mode=mode,
                              cost_eur=fuel_cost(cand, scn.vehicle),
                              time_min=time_cost(cand, scn.refuel_duration_s) / 60.0,
                              objective=0.0)
            return _plan_outcome(ctx, "cheapest_nearby", mode, plan)
    raise errors.NoReachableStation("no nearby station in fuel range")


def strategy_route_aware(ctx: ScenarioContext, mode: Mode) -> Outcome:
    """Full pipeline: corridor candidates on the cheapest day's habitual
    route, weighted cost/time selection."""
    scn = ctx.scenario
    router = BuiltinRouter(scn.graph)
    candidates = None
    # An empty corridor is not fatal: widen it (doubling, three tries) until
    # a candidate appears, as sparse station coverage demands.
    for attempt in range(4):
        try:
            candidates = generate_candidates(
                router, ctx.day_route, scn.graph, ctx.departure_node,
                list(ctx.remaining_nodes), scn.stations, ctx.day_prices,
                delta_km=ctx.delta_km,
                corridor_radius_m=scn.corridor_radius_m * 2 ** attempt)
            break
        except errors.NoCandidates:
            if attempt == 3:
                raise
    plan = select_stop(candidates, scn.vehicle, mode, day=ctx.day,
                       refuel_duration_s=scn.refuel_duration_s)
    return _plan_outcome(ctx, "route_aware", mode, plan)


_STRATEGY_FNS = {
    "nearest": strategy_nearest,
    "cheapest_nearby": strategy_cheapest_nearby,
    "route_aware": strategy_route_aware,
}


def run_scenario(scn: Scenario, strategies: tuple[str, ...] = STRATEGIES,
                 modes: tuple[Mode, ...] | None = None) -> list[Outcome]:
    """All strategy x mode outcomes for one scenario; failures become rows."""
    modes = modes or (scn.mode,)
    outcomes = []
    try:
        ctx = build_context(scn)
    except errors.RefuelOptError as exc:
        return [Outcome(scenario=scn.name, strategy=s, mode=m.name,
                        k_cost=m.k_cost, k_time=m.k_time,
                        error=f"{type(exc).__name__}: {exc}")
                for s in strategies for m in modes]
    for strategy in strategies:
        for mode in modes:
            try:
                outcomes.append(_STRATEGY_FNS[strategy](ctx, mode))
            except errors.RefuelOptError as exc:
                outcomes.append(Outcome(
                    scenario=scn.name, strategy=strategy, mode=mode.name,
                    k_cost=mode.k_cost, k_time=mode.k_time,
                    context_hash=ctx.context_hash,
                    error=f"{type(exc).__name__}: {exc}"))
    return outcomes


def run_cohort(scenarios: list[Scenario], strategies: tuple[str, ...] = STRATEGIES,
               modes: tuple[Mode, ...] | None = None, jobs: int = 1) -> AggregateReport:
    """Replay every scenario under every strategy and mode and aggregate.

    Failed runs are excluded from the statistics but counted, never
    silently dropped. With jobs > 1 scenarios run in parallel processes;
    the result is identical to sequential execution.
    """
    if not scenarios:
        raise ValueError("need at least one scenario")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_scenario = list(pool.map(run_scenario, scenarios,
                                         [strategies] * len(scenarios),
                                         [modes] * len(scenarios)))
    else:
        per_scenario = [run_scenario(s, strategies, modes) for s in scenarios]
    outcomes = [o for group in per_scenario for o in group]

    rows = []
    mode_keys = []
    for o in outcomes:
        key = (o.strategy, o.mode, o.k_cost, o.k_time)
        if key not in mode_keys:
            mode_keys.append(key)
    for strategy, mode_name, k1, k2 in mode_keys:
        cell = [o for o in outcomes
                if (o.strategy, o.mode, o.k_cost, o.k_time) == (strategy, mode_name, k1, k2)]
        ok = [o for o in cell if o.error is None]
        costs = [o.cost_eur for o in ok]
        times = [o.time_min for o in ok]
        rows.append(ReportRow(
            strategy=strategy, mode=mode_name, k_cost=k1, k_time=k2,
            cost_mean=statistics.mean(costs) if costs else 0.0,
            cost_std=statistics.pstdev(costs) if len(costs) > 1 else 0.0,
            time_mean=statistics.mean(times) if times else 0.0,
            time_std=statistics.pstdev(times) if len(times) > 1 else 0.0,
            n_runs=len(ok), n_failed=len(cell) - len(ok)))
    return AggregateReport(rows=tuple(rows), outcomes=tuple(outcomes))


def write_per_run_csv(report: AggregateReport, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PER_RUN_HEADER)
        for o in report.outcomes:
            writer.writerow([o.scenario, o.strategy, o.mode, repr(o.k_cost),
                             repr(o.k_time), o.day, o.station_id,
                             repr(o.cost_eur), repr(o.time_min),
                             int(o.gate_accepted), repr(o.delta_km),
                             o.context_hash, o.error or ""])


def write_report_csv(report: AggregateReport, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_HEADER)
        for r in report.rows:
            writer.writerow([r.strategy, r.mode, repr(r.k_cost), repr(r.k_time),
                             repr(r.cost_mean), repr(r.cost_std),
                             repr(r.time_mean), repr(r.time_std),
                             r.n_runs, r.n_failed])
