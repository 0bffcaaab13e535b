"""Road network routing substrate.

A small built-in router (Dijkstra with a deterministic lexicographic
tie-break on the node sequence) stands in for an external engine. The
RouterPort protocol keeps the rest of the system engine-agnostic, so a
different router can be plugged in without touching the optimizer.
"""

from __future__ import annotations

import csv
import heapq
import math
import random
from dataclasses import dataclass, field
from typing import Protocol

from . import errors
from .geo import haversine_m, point_polyline_distance_m, valid_coords

NODES_HEADER = ["id", "lat", "lon"]
EDGES_HEADER = ["from", "to", "length_m", "time_s"]

DEFAULT_CORRIDOR_RADIUS_M = 2000.0


@dataclass(frozen=True)
class Route:
    nodes: tuple[str, ...]
    distance_km: float
    time_s: float

    def polyline(self, graph: "RoadGraph") -> list[tuple[float, float]]:
        return [graph.nodes[n] for n in self.nodes]


@dataclass
class RoadGraph:
    nodes: dict[str, tuple[float, float]] = field(default_factory=dict)
    # adjacency: from -> list of (to, length_m, time_s)
    adj: dict[str, list[tuple[str, float, float]]] = field(default_factory=dict)

    def add_node(self, node_id: str, lat: float, lon: float) -> None:
        if not valid_coords(lat, lon):
            raise ValueError(f"invalid coordinates for node {node_id}")
        self.nodes[node_id] = (lat, lon)
        self.adj.setdefault(node_id, [])

    def add_edge(self, src: str, dst: str, length_m: float, time_s: float) -> None:
        if src not in self.nodes or dst not in self.nodes:
            raise errors.DanglingEdge(f"edge {src}->{dst} references unknown node")
        if length_m <= 0 or time_s <= 0:
            raise ValueError(f"edge {src}->{dst} must have positive length and time")
        geo = haversine_m(*self.nodes[src], *self.nodes[dst])
        if length_m < geo * 0.999:
            raise ValueError(f"edge {src}->{dst} shorter than the geodesic "
                             f"({length_m:.1f} m < {geo:.1f} m)")
        self.adj.setdefault(src, []).append((dst, length_m, time_s))

    def nearest_node(self, lat: float, lon: float) -> tuple[str, float]:
        """Snap a coordinate to the closest graph node; returns (id, meters)."""
        if not self.nodes:
            raise ValueError("empty graph")
        best_id, best_d = None, math.inf
        for nid in sorted(self.nodes):
            d = haversine_m(lat, lon, *self.nodes[nid])
            if d < best_d:
                best_id, best_d = nid, d
        return best_id, best_d


class RouterPort(Protocol):
    """Routing engine interface; any implementation must keep one-stop
    routes no shorter than the direct route (triangle property)."""

    def shortest_route(self, src: str, dst: str, metric: str = "time") -> Route: ...

    def one_stop_route(self, start: str, stop: str,
                       remaining: list[str], metric: str = "time") -> Route: ...


class BuiltinRouter:
    """Dijkstra router over a RoadGraph.

    Among equal-cost paths the lexicographically smallest node sequence
    wins, which makes results reproducible across runs and platforms.
    """

    def __init__(self, graph: RoadGraph):
        self.graph = graph

    def shortest_route(self, src: str, dst: str, metric: str = "time") -> Route:
        graph = self.graph
        if src not in graph.nodes or dst not in graph.nodes:
            raise errors.Unreachable(f"unknown node in query {src}->{dst}")
        if metric not in ("time", "distance"):
            raise ValueError(f"unknown metric {metric!r}")
        weight_idx = 2 if metric == "time" else 1
        # Heap keys are (cost, path); among equal costs the smaller node
        # sequence pops first, giving the deterministic tie-break for free.
        heap: list[tuple[float, tuple[str, ...]]] = [(0.0, (src,))]
        done: set[str] = set()
        while heap:
            cost, path = heapq.heappop(heap)
            node = path[-1]
            if node in done:
                continue
            done.add(node)
            if node == dst:
                dist_m = 0.0
                total_time_s = 0.0
                for a, b in zip(path, path[1:]):
                    edge = min((e for e in graph.adj[a] if e[0] == b),
                               key=lambda e: e[weight_idx])
                    dist_m += edge[1]
                    total_time_s += edge[2]
                return Route(nodes=path, distance_km=dist_m / 1000.0, time_s=total_time_s)
            for to, length_m, time_s in graph.adj.get(node, []):
                if to not in done:
                    heapq.heappush(heap, (cost + (length_m, time_s)[weight_idx - 1],
                                          path + (to,)))
        raise errors.Unreachable(f"no path {src}->{dst}")

    def one_stop_route(self, start: str, stop: str,
                       remaining: list[str], metric: str = "time") -> Route:
        """Route start -> stop -> every remaining waypoint, in order."""
        legs = []
        waypoints = [start, stop] + list(remaining)
        for a, b in zip(waypoints, waypoints[1:]):
            legs.append(self.shortest_route(a, b, metric=metric))
        nodes: tuple[str, ...] = legs[0].nodes
        for leg in legs[1:]:
            nodes = nodes + leg.nodes[1:]
        return Route(nodes=nodes,
                     distance_km=sum(l.distance_km for l in legs),
                     time_s=sum(l.time_s for l in legs))


def corridor_filter(polyline: list[tuple[float, float]], points: list[tuple[float, float]],
                    radius_m: float = DEFAULT_CORRIDOR_RADIUS_M) -> list[int]:
    """Indices of points within `radius_m` of the polyline."""
    if not polyline:
        raise ValueError("empty route polyline")
    return [i for i, (lat, lon) in enumerate(points)
            if point_polyline_distance_m(lat, lon, polyline) <= radius_m]


def load_road_graph(nodes_path: str, edges_path: str) -> RoadGraph:
    """Load the graph CSV pair, rejecting dangling or degenerate edges."""
    graph = RoadGraph()
    try:
        with open(nodes_path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            if next(reader, None) != NODES_HEADER:
                raise errors.SchemaError(f"{nodes_path}: bad header")
            for lineno, row in enumerate(reader, start=2):
                try:
                    graph.add_node(row[0], float(row[1]), float(row[2]))
                except (ValueError, IndexError) as exc:
                    raise errors.ParseError(lineno, str(exc)) from None
        with open(edges_path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            if next(reader, None) != EDGES_HEADER:
                raise errors.SchemaError(f"{edges_path}: bad header")
            for lineno, row in enumerate(reader, start=2):
                try:
                    graph.add_edge(row[0], row[1], float(row[2]), float(row[3]))
                except (ValueError, IndexError) as exc:
                    raise errors.ParseError(lineno, str(exc)) from None
    except OSError as exc:
        raise errors.IoError(str(exc)) from exc
    return graph


def save_road_graph(graph: RoadGraph, nodes_path: str, edges_path: str) -> None:
    try:
        with open(nodes_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(NODES_HEADER)
            for nid in sorted(graph.nodes):
                lat, lon = graph.nodes[nid]
                writer.writerow([nid, repr(lat), repr(lon)])
        with open(edges_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(EDGES_HEADER)
            for src in sorted(graph.adj):
                for to, length_m, time_s in sorted(graph.adj[src]):
                    writer.writerow([src, to, repr(length_m), repr(time_s)])
    except OSError as exc:
        raise errors.IoError(str(exc)) from exc


def generate_city(seed: int, rows: int = 12, cols: int = 12,
                  spacing_m: float = 500.0,
                  center: tuple[float, float] = (44.65, 10.92)) -> RoadGraph:
    """Synthetic grid city: 4-connected lattice with jittered road lengths.

    Road length is the geodesic times a 1.0-1.25 wiggle factor; travel time
    follows a per-edge speed drawn between 30 and 60 km/h. Deterministic
    per seed.
    """
    rng = random.Random(seed)
    graph = RoadGraph()
    dlat = spacing_m / 111_194.9
    dlon = spacing_m / (111_194.9 * math.cos(math.radians(center[0])))

    def node_id(r: int, c: int) -> str:
        return f"N{r:02d}_{c:02d}"

    for r in range(rows):
        for c in range(cols):
            graph.add_node(node_id(r, c),
                           center[0] + (r - rows / 2) * dlat,
                           center[1] + (c - cols / 2) * dlon)
    for r in range(rows):
        for c in range(cols):
            for r2, c2 in ((r + 1, c), (r, c + 1)):
                if r2 >= rows or c2 >= cols:
                    continue
                a, b = node_id(r, c), node_id(r2, c2)
                geo = haversine_m(*graph.nodes[a], *graph.nodes[b])
                length = geo * rng.uniform(1.0, 1.25)
                speed_ms = rng.uniform(30.0, 60.0) / 3.6
                time_s = length / speed_ms
                graph.add_edge(a, b, length, time_s)
                graph.add_edge(b, a, length, time_s)
    return graph
