"""Visible-area detection and per-lane occlusion tracking.

Occluded space on each lanelet is kept as a set of arc-length intervals
spanning the full lane width.  Each update grows the intervals by the
distance a hidden road user could cover at the lane speed limit (downstream
only on vehicle lanes, both ways on sidewalks, spilling across lanelet ends)
and then removes every cell the sensor currently sees completely.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import shapely
from shapely.geometry import Polygon

from . import intervals as iv
from .geometry import EPS_AREA, DEFAULT_N_ARC, RegionSet, visible_region
from .road import AgentState, Lanelet, LaneletNetwork

#: obstacles are tested against the visible area with this margin [m]
DETECTION_MARGIN = 0.1


@dataclass
class LaneOcclusion:
    lanelet_id: str
    intervals: list[tuple[float, float]] = field(default_factory=list)
    initialized: bool = False

    @property
    def length(self) -> float:
        return iv.total_length(self.intervals)

    def contains(self, s: float, tol: float = 1e-9) -> bool:
        return iv.contains(self.intervals, s, tol)


@dataclass
class OcclusionMap:
    per_lane: dict[str, LaneOcclusion]
    t: float = 0.0

    @classmethod
    def empty(cls, net: LaneletNetwork, t: float = 0.0) -> "OcclusionMap":
        return cls({lid: LaneOcclusion(lid) for lid in net.ids}, t)

    def __getitem__(self, lid: str) -> LaneOcclusion:
        return self.per_lane[lid]

    @property
    def initialized(self) -> bool:
        return all(o.initialized for o in self.per_lane.values())


def detect(ego: AgentState, obstacles: Sequence[Polygon], net: LaneletNetwork,
           range_: float, n_arc: int = DEFAULT_N_ARC) -> tuple[RegionSet, list[int]]:
    """Visible road area and the indices of obstacles that touch it."""
    a_v = visible_region((ego.x, ego.y), range_, net.road_area, obstacles, n_arc)
    visible = []
    if not a_v.is_empty:
        geom = a_v.prepared()
        for i, o in enumerate(obstacles):
            probe = o.buffer(DETECTION_MARGIN, join_style="mitre")
            if shapely.intersects(geom, probe) and \
                    shapely.intersection(geom, probe).area > EPS_AREA:
                visible.append(i)
    return a_v, visible


def hidden_intervals(a_v: RegionSet, lanelet: Lanelet) -> list[tuple[float, float]]:
    """Arc-length intervals whose lane cells are not entirely inside ``a_v``."""
    s = lanelet.section_s
    covered = a_v.covers(lanelet.cells)
    return iv.normalize((s[i], s[i + 1]) for i in np.flatnonzero(~covered))


def init_lane(a_v: RegionSet, lanelet: Lanelet) -> LaneOcclusion:
    return LaneOcclusion(lanelet.id, hidden_intervals(a_v, lanelet), True)


def _spill(net: LaneletNetwork, lid: str, amount: float, downstream: bool,
           out: dict[str, list], depth: int = 0) -> None:
    if amount <= iv.EPS_LENGTH or depth > 16:
        return
    neighbours = net[lid].successors if downstream else net.predecessors[lid]
    for nid in neighbours:
        length = net[nid].length
        if downstream:
            out.setdefault(nid, []).append((0.0, min(amount, length)))
        else:
            out.setdefault(nid, []).append((max(0.0, length - amount), length))
        if amount > length:
            _spill(net, nid, amount - length, downstream, out, depth + 1)


def propagate_lane(occ: LaneOcclusion, lanelet: Lanelet, dt: float,
                   net: LaneletNetwork) -> tuple[LaneOcclusion, dict[str, list]]:
    """Grow occluded intervals by ``v_max * dt``.

    Returns the grown occlusion of ``lanelet`` (clipped to the lane) and the
    intervals spilled into neighbouring lanelets, keyed by lanelet id.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    reach = lanelet.v_max * dt
    length = lanelet.length
    back = reach if lanelet.bidirectional else 0.0
    grown = [(a - back, b + reach) for a, b in occ.intervals]
    spill: dict[str, list] = {}
    for a, b in grown:
        if b > length:
            _spill(net, lanelet.id, b - length, True, spill)
        if a < 0.0:
            _spill(net, lanelet.id, -a, False, spill)
    out = LaneOcclusion(lanelet.id, iv.normalize(grown, 0.0, length), occ.initialized)
    return out, {k: iv.normalize(v) for k, v in spill.items()}


def update(occ_map: OcclusionMap, a_v: RegionSet, net: LaneletNetwork,
           dt: float) -> OcclusionMap:
    """One tracking step: initialise new lanes, propagate and subtract ``a_v``."""
    grown: dict[str, list] = {}
    for lid, occ in occ_map.per_lane.items():
        if not occ.initialized:
            continue
        own, spill = propagate_lane(occ, net[lid], dt, net)
        grown.setdefault(lid, []).extend(own.intervals)
        for nid, xs in spill.items():
            grown.setdefault(nid, []).extend(xs)

    per_lane = {}
    for lanelet in net:
        lid = lanelet.id
        hidden = hidden_intervals(a_v, lanelet)
        old = occ_map.per_lane.get(lid)
        if old is None or not old.initialized:
            per_lane[lid] = LaneOcclusion(lid, hidden, True)
        else:
            reach = iv.normalize(grown.get(lid, []), 0.0, lanelet.length)
            per_lane[lid] = LaneOcclusion(lid, iv.intersect(reach, hidden), True)
    return OcclusionMap(per_lane, occ_map.t + dt)


def naive_map(a_v: RegionSet, net: LaneletNetwork, t: float = 0.0) -> OcclusionMap:
    """Memoryless occlusion: every lane cell not currently seen."""
    return OcclusionMap({l.id: init_lane(a_v, l) for l in net}, t)


def occluded_region(occ_map: OcclusionMap, net: LaneletNetwork) -> RegionSet:
    strips = [net[lid].strip(a, b)
              for lid, occ in occ_map.per_lane.items() for a, b in occ.intervals]
    return RegionSet.from_polygons(strips)


class OcclusionTracker:
    """Stateful wrapper that records ``(t, area)`` after every step."""

    def __init__(self, net: LaneletNetwork, tracking: bool = True):
        self.net = net
        self.tracking = tracking
        self.map = OcclusionMap.empty(net)
        self.region = RegionSet()
        self.history: list[tuple[float, float]] = []

    def step(self, a_v: RegionSet, t: float, dt: float) -> RegionSet:
        if self.tracking and self.map.initialized:
            self.map = update(self.map, a_v, self.net, dt)
            self.map.t = t
        else:
            self.map = naive_map(a_v, self.net, t)
        self.region = occluded_region(self.map, self.net)
        self.history.append((t, self.region.area))
        return self.region
