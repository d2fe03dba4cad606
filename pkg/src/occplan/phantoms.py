"""Phantom road users hypothesised inside occluded areas.

Static spawn points sit behind static obstacles ahead of the ego vehicle and
host pedestrians walking straight at the reference path.  Dynamic spawn
points sit on occluded lane intervals whose downstream path crosses the
reference path and host vehicles and cyclists following the lane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import shapely
from shapely.geometry import Point, Polygon
from shapely.ops import nearest_points

from .geometry import RegionSet, obstacle_shadow
from .occlusion import OcclusionMap
from .road import AgentState, LaneletNetwork, ReferencePath
from .tracking import Prediction

DEFAULT_PROFILES = {
    "pedestrian": [(1.5, 0.0), (2.5, 0.0)],
    "cyclist": [(3.0, 0.0), (3.0, 1.0), (6.0, 0.0), (6.0, 1.0)],
    # vehicle speeds are fractions of the hosting lane's v_max
    "vehicle": [(0.5, 0.0), (0.5, 2.0), (1.0, 0.0), (1.0, 2.0)],
}


@dataclass
class PhantomParams:
    profiles: dict = field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_PROFILES.items()})
    classes: tuple = ("pedestrian", "cyclist", "vehicle")
    static_horizon: float = 30.0
    dynamic_horizon: float = 50.0
    shadow_margin: float = 0.5
    cov: float = 0.1
    pedestrian_overshoot: float = 10.0
    path_length: float = 80.0


@dataclass
class SpawnPoint:
    position: np.ndarray
    kind: str                      # "static_pedestrian" | "dynamic_lane"
    lanelet_id: str | None = None
    s: float | None = None
    source: str | None = None      # obstacle id or crossing lanelet id


@dataclass
class PhantomAgent:
    cls: str
    spawn: SpawnPoint
    profiles: list[tuple[float, float]]
    path: np.ndarray
    v_max: float = math.inf

    def __post_init__(self):
        if not self.profiles:
            raise ValueError("phantom needs at least one behaviour profile")
        if any(v0 < 0.0 for v0, _ in self.profiles):
            raise ValueError("profile speeds must be non-negative")

    @property
    def id(self) -> str:
        return f"phantom-{self.cls}-{self.spawn.source}-{self.spawn.lanelet_id}"


@dataclass
class PhantomPrediction:
    agent: PhantomAgent
    profile: tuple[float, float]
    prediction: Prediction


def _obstacle_s_range(poly: Polygon, ref: ReferencePath) -> tuple[float, float]:
    s = [ref.frenet_project(p)[0] for p in np.asarray(poly.exterior.coords)[:-1]]
    return min(s), max(s)


def static_spawn_points(a_o: RegionSet, static_obstacles: Sequence[tuple[str, Polygon]],
                        ref: ReferencePath, ego: AgentState, sensor_range: float,
                        visible_obstacles: Sequence[Polygon] = (),
                        params: PhantomParams | None = None) -> list[SpawnPoint]:
    """One pedestrian spawn point behind each relevant static obstacle.

    The point is the occluded location closest to the reference path within
    ``shadow_margin`` of the obstacle's shadow.
    """
    p = params or PhantomParams()
    if a_o.is_empty:
        return []
    blocked = shapely.union_all(list(visible_obstacles)) if visible_obstacles else None
    line = ref.linestring
    out = []
    for oid, poly in static_obstacles:
        s_min, s_max = _obstacle_s_range(poly, ref)
        if s_max <= ego.s or s_min - ego.s > p.static_horizon:
            continue
        if poly.covers(Point(ego.x, ego.y)):
            continue
        shadow = obstacle_shadow((ego.x, ego.y), poly, sensor_range)
        if shadow.is_empty:
            continue
        zone = shapely.intersection(a_o.geom, shadow.buffer(p.shadow_margin))
        zone = shapely.difference(zone, poly)
        if blocked is not None:
            zone = shapely.difference(zone, blocked)
        if zone.is_empty or zone.area < 1e-4:
            continue
        pt = nearest_points(zone, line)[0]
        out.append(SpawnPoint(np.array([pt.x, pt.y]), "static_pedestrian", source=str(oid)))
    return out


def _crossing_s(lane_line: ReferencePath, ref: ReferencePath) -> float | None:
    hit = shapely.intersection(lane_line.linestring, ref.linestring)
    if hit.is_empty:
        return None
    pts = shapely.get_coordinates(hit)
    return min(lane_line.frenet_project(q)[0] for q in pts)


def _along_reference(lane, ref: ReferencePath, tol: float = 0.5) -> bool:
    pts = lane.centerline.points
    dist = shapely.distance(ref.linestring, shapely.points(pts))
    return float(np.mean(dist <= tol)) >= 0.5


def dynamic_spawn_points(occ_map: OcclusionMap, net: LaneletNetwork, ref: ReferencePath,
                         visible_obstacles: Sequence[Polygon] = (),
                         params: PhantomParams | None = None) -> list[SpawnPoint]:
    """Occluded lane points closest (upstream, in arc length) to a reference-path crossing."""
    p = params or PhantomParams()
    blocked = shapely.union_all(list(visible_obstacles)) if visible_obstacles else None
    found: dict[tuple[str, float], tuple[float, SpawnPoint]] = {}
    for lane in net:
        if lane.lane_type != "vehicle" or _along_reference(lane, ref):
            continue
        s_cross = _crossing_s(lane.centerline, ref)
        if s_cross is None:
            continue
        # breadth-first walk upstream: (lanelet id, max s on it, distance at that s)
        queue = [(lane.id, s_cross, 0.0)]
        best = None
        seen = set()
        while queue:
            lid, s_hi, dist = queue.pop(0)
            if lid in seen or dist > p.dynamic_horizon:
                continue
            seen.add(lid)
            for a, b in reversed(occ_map[lid].intervals):
                if a > s_hi:
                    continue
                s_sp = _free_point(net, lid, max(a, s_hi - (p.dynamic_horizon - dist)),
                                   min(b, s_hi), blocked)
                if s_sp is None:
                    continue
                cand = (dist + s_hi - s_sp, lid, s_sp)
                if best is None or cand < best:
                    best = cand
                break
            for pid in sorted(net.predecessors[lid]):
                queue.append((pid, net[pid].length, dist + s_hi))
        if best is None or best[0] > p.dynamic_horizon:
            continue
        d, lid, s_sp = best
        pos = net[lid].centerline.point_at(s_sp)
        key = (lid, round(s_sp, 6))
        sp = SpawnPoint(np.asarray(pos, float), "dynamic_lane", lid, float(s_sp), lane.id)
        if key not in found or d < found[key][0]:
            found[key] = (d, sp)
    return [found[k][1] for k in sorted(found)]


def _free_point(net, lid, lo, hi, blocked) -> float | None:
    """Largest ``s`` in ``[lo, hi]`` whose centre point is outside visible obstacles."""
    if hi < lo:
        return None
    if blocked is None:
        return hi
    cl = net[lid].centerline
    for s in np.arange(hi, lo - 1e-9, -0.5):
        q = cl.point_at(s)
        if not shapely.intersects_xy(blocked, q[0], q[1]):
            return float(s)
    return None


def make_phantoms(static_points: Sequence[SpawnPoint], dynamic_points: Sequence[SpawnPoint],
                  net: LaneletNetwork, ref: ReferencePath,
                  params: PhantomParams | None = None) -> list[PhantomAgent]:
    """Instantiate phantom agents of every enabled class at the spawn points."""
    p = params or PhantomParams()
    agents = []
    if "pedestrian" in p.classes:
        for sp in static_points:
            agents.append(PhantomAgent("pedestrian", sp, list(p.profiles["pedestrian"]),
                                       _pedestrian_path(sp.position, ref, p.pedestrian_overshoot)))
    for sp in dynamic_points:
        lane = net[sp.lanelet_id]
        path = net.follow(lane.id, sp.s, p.path_length)
        if len(path) < 2:
            continue
        for cls in ("vehicle", "cyclist"):
            if cls not in p.classes:
                continue
            profiles = list(p.profiles[cls])
            if cls == "vehicle":
                profiles = [(f * lane.v_max, a) for f, a in profiles]
            agents.append(PhantomAgent(cls, sp, profiles, path, lane.v_max))
    return agents


def _pedestrian_path(start: np.ndarray, ref: ReferencePath, overshoot: float) -> np.ndarray:
    s, d = ref.frenet_project(start)
    foot = ref.point_at(s)
    direction = foot - start
    dist = float(np.hypot(*direction))
    if dist < 1e-6:
        h = float(ref.heading_at(s))
        side = -1.0 if d >= 0 else 1.0
        direction, dist = side * np.array([-math.sin(h), math.cos(h)]), 0.0
    else:
        direction = direction / dist
    return np.array([start, start + (dist + overshoot) * direction])


def profile_travel(v0: float, a: float, v_max: float, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distance and speed under constant acceleration with speed clipped to ``[0, v_max]``."""
    v0 = min(max(v0, 0.0), v_max)
    if a > 0.0:
        t_sat, v_sat = (v_max - v0) / a if math.isfinite(v_max) else math.inf, v_max
    elif a < 0.0:
        t_sat, v_sat = -v0 / a, 0.0
    else:
        t_sat, v_sat = math.inf, v0
    tc = np.minimum(t, t_sat)
    dist = v0 * tc + 0.5 * a * tc ** 2 + v_sat * np.maximum(0.0, t - t_sat)
    speed = np.where(t < t_sat, v0 + a * t, v_sat)
    return dist, speed


def predict_phantom(agent: PhantomAgent, dt: float, t_pred: float, t0: float = 0.0,
                    cov: float = 0.1) -> list[PhantomPrediction]:
    """One prediction per behaviour profile along the agent's path."""
    n = int(round(t_pred / dt))
    t_rel = np.arange(n + 1) * dt
    path = ReferencePath(agent.path)
    covs = np.repeat((cov * np.eye(2))[None], n + 1, axis=0)
    out = []
    for v0, a in agent.profiles:
        dist, speed = profile_travel(v0, a, agent.v_max, t_rel)
        mean = path.point_at(dist)
        h = path.heading_at(dist)
        vel = speed[:, None] * np.column_stack([np.cos(h), np.sin(h)])
        out.append(PhantomPrediction(agent, (v0, a), Prediction(t0 + t_rel, mean, covs, vel)))
    return out
