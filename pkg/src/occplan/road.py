"""Lanelet road model, reference paths and Frenet projection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import shapely
from shapely.geometry import LineString, Polygon
from shapely.geometry.polygon import orient

from .geometry import RegionSet

LANE_TYPES = ("vehicle", "sidewalk")
#: occlusions on these lane types spread in both directions
BIDIRECTIONAL = {"vehicle": False, "sidewalk": True}
#: longitudinal spacing of centerline samples and occlusion cells [m]
CENTERLINE_SPACING = 0.5
#: cells are shrunk by this much at the lane boundaries [m]
CELL_INSET = 1e-3
#: successor cross-sections must meet within this distance [m]
CONTINUITY_TOL = 0.1


class InvalidLaneletError(ValueError):
    pass


def _cumulative(points: np.ndarray) -> np.ndarray:
    seg = np.hypot(*np.diff(points, axis=0).T)
    return np.concatenate([[0.0], np.cumsum(seg)])


def _interp_polyline(points: np.ndarray, cum: np.ndarray, s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    x = np.interp(s, cum, points[:, 0])
    y = np.interp(s, cum, points[:, 1])
    return np.stack([x, y], axis=-1)


def resample(points, spacing: float) -> np.ndarray:
    """Resample a polyline at uniform arc-length spacing (endpoints kept)."""
    pts = np.asarray(points, dtype=float)
    cum = _cumulative(pts)
    n = max(1, int(math.ceil(cum[-1] / spacing - 1e-9)))
    return _interp_polyline(pts, cum, np.linspace(0.0, cum[-1], n + 1))


class ReferencePath:
    """Polyline with arc-length parameterisation.

    Positive lateral offsets ``d`` lie to the left of increasing ``s``.
    """

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ValueError("reference path needs at least two 2D points")
        keep = np.concatenate([[True], np.hypot(*np.diff(pts, axis=0).T) > 1e-12])
        pts = pts[keep]
        if len(pts) < 2:
            raise ValueError("reference path points must be distinct")
        self.points = pts
        self.cumulative_s = _cumulative(pts)
        d = np.diff(pts, axis=0)
        self._seg_len = np.hypot(d[:, 0], d[:, 1])
        self._tangent = d / self._seg_len[:, None]

    @property
    def length(self) -> float:
        return float(self.cumulative_s[-1])

    @cached_property
    def linestring(self) -> LineString:
        return LineString(self.points)

    def _segment_index(self, s) -> np.ndarray:
        idx = np.searchsorted(self.cumulative_s, s, side="right") - 1
        return np.clip(idx, 0, len(self._seg_len) - 1)

    def point_at(self, s) -> np.ndarray:
        """Cartesian point at arc length ``s``; extrapolates past both ends."""
        s = np.asarray(s, dtype=float)
        i = self._segment_index(s)
        ds = s - self.cumulative_s[i]
        return self.points[i] + ds[..., None] * self._tangent[i]

    def heading_at(self, s) -> np.ndarray:
        t = self._tangent[self._segment_index(np.asarray(s, dtype=float))]
        return np.arctan2(t[..., 1], t[..., 0])

    @cached_property
    def _curvature_table(self) -> tuple[np.ndarray, np.ndarray]:
        pts = resample(self.points, CENTERLINE_SPACING)
        cum = _cumulative(pts)
        if len(pts) < 3:
            return cum, np.zeros(len(pts))
        d = np.diff(pts, axis=0)
        heading = np.unwrap(np.arctan2(d[:, 1], d[:, 0]))
        mid = 0.5 * (cum[1:] + cum[:-1])
        kappa = np.gradient(heading, mid)
        # smooth over ~2 m to suppress polyline kinks
        w = 5
        kernel = np.ones(w) / w
        kappa = np.convolve(np.pad(kappa, w // 2, mode="edge"), kernel, mode="valid")
        return mid, kappa

    def curvature_at(self, s) -> np.ndarray:
        mid, kappa = self._curvature_table
        return np.interp(np.asarray(s, dtype=float), mid, kappa)

    def to_cartesian(self, s, d) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        d = np.asarray(d, dtype=float)
        t = self._tangent[self._segment_index(s)]
        normal = np.stack([-t[..., 1], t[..., 0]], axis=-1)
        return self.point_at(s) + d[..., None] * normal

    def frenet_project(self, p) -> tuple[float, float]:
        """Return ``(s, d)`` of the globally nearest point on the path.

        ``s`` is clamped to ``[0, length]``.  Among equidistant segments the
        one with the smallest ``s`` wins.  ``d`` is the signed offset normal to
        the winning segment, so points beyond an end project to ``d`` equal
        to their lateral offset from the extended end segment.
        """
        px, py = float(p[0]), float(p[1])
        a = self.points[:-1]
        rel = np.column_stack([px - a[:, 0], py - a[:, 1]])
        along = np.einsum("ij,ij->i", rel, self._tangent)
        u = np.clip(along, 0.0, self._seg_len)
        foot = a + u[:, None] * self._tangent
        dist2 = (px - foot[:, 0]) ** 2 + (py - foot[:, 1]) ** 2
        best = dist2.min()
        i = int(np.flatnonzero(dist2 <= best + 1e-18)[0])
        s = float(self.cumulative_s[i] + u[i])
        t = self._tangent[i]
        d = float(t[0] * rel[i, 1] - t[1] * rel[i, 0])
        return s, d

    def project_many(self, pts) -> np.ndarray:
        return np.array([self.frenet_project(p) for p in np.asarray(pts, dtype=float)])

    def slice(self, s0: float, s1: float) -> np.ndarray:
        """Polyline points covering ``[s0, s1]`` (both clamped to the path)."""
        s0, s1 = max(0.0, s0), min(self.length, s1)
        inner = self.cumulative_s[(self.cumulative_s > s0) & (self.cumulative_s < s1)]
        return self.point_at(np.concatenate([[s0], inner, [s1]]))


@dataclass
class AgentState:
    x: float
    y: float
    theta: float
    v: float
    s: float = 0.0
    d: float = 0.0

    def __post_init__(self):
        if self.v < 0.0:
            raise ValueError(f"speed must be non-negative, got {self.v}")

    @classmethod
    def on_path(cls, x: float, y: float, theta: float, v: float,
                ref: ReferencePath) -> "AgentState":
        s, d = ref.frenet_project((x, y))
        return cls(float(x), float(y), float(theta), float(v), s, d)

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(eq=False)
class Lanelet:
    id: str
    left_boundary: np.ndarray
    right_boundary: np.ndarray
    lane_type: str = "vehicle"
    v_max: float = 13.9
    successors: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.id = str(self.id)
        self.left_boundary = np.asarray(self.left_boundary, dtype=float)
        self.right_boundary = np.asarray(self.right_boundary, dtype=float)
        self.successors = [str(s) for s in self.successors]
        for name, b in (("left", self.left_boundary), ("right", self.right_boundary)):
            if b.ndim != 2 or b.shape[1] != 2 or len(b) < 2:
                raise InvalidLaneletError(f"lanelet {self.id}: {name} boundary needs >= 2 points")
        if self.lane_type not in LANE_TYPES:
            raise InvalidLaneletError(f"lanelet {self.id}: unknown lane type {self.lane_type!r}")
        if not self.v_max > 0.0:
            raise InvalidLaneletError(f"lanelet {self.id}: v_max must be positive")

    @property
    def bidirectional(self) -> bool:
        return BIDIRECTIONAL[self.lane_type]

    @cached_property
    def polygon(self) -> Polygon:
        ring = np.vstack([self.left_boundary, self.right_boundary[::-1]])
        poly = Polygon(ring)
        if not poly.exterior.is_simple or poly.area <= 0.0:
            raise InvalidLaneletError(
                f"lanelet {self.id}: boundaries cross or enclose no area")
        return orient(poly, sign=1.0)

    @cached_property
    def _sections(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Matched (left, right, centre) samples at <= 0.5 m centre spacing."""
        left, right = self.left_boundary, self.right_boundary
        lc, rc = _cumulative(left), _cumulative(right)
        fine = max(len(left), len(right),
                   int(math.ceil(max(lc[-1], rc[-1]) / 0.1)) + 1)
        u = np.linspace(0.0, 1.0, fine)
        lp = _interp_polyline(left, lc, u * lc[-1])
        rp = _interp_polyline(right, rc, u * rc[-1])
        mid = 0.5 * (lp + rp)
        mc = _cumulative(mid)
        n = max(1, int(math.ceil(mc[-1] / CENTERLINE_SPACING - 1e-9)))
        s = np.linspace(0.0, mc[-1], n + 1)
        us = np.interp(s, mc, u)
        return (_interp_polyline(left, lc, us * lc[-1]),
                _interp_polyline(right, rc, us * rc[-1]),
                _interp_polyline(mid, mc, s))

    @cached_property
    def centerline(self) -> ReferencePath:
        return ReferencePath(self._sections[2])

    @property
    def length(self) -> float:
        return self.centerline.length

    @property
    def section_s(self) -> np.ndarray:
        return self.centerline.cumulative_s

    def cross_section(self, s: float) -> tuple[np.ndarray, np.ndarray]:
        left, right, _ = self._sections
        cum = self.section_s
        return _interp_polyline(left, cum, s), _interp_polyline(right, cum, s)

    @cached_property
    def cells(self) -> np.ndarray:
        """Quadrilateral cells between consecutive cross-sections, inset laterally."""
        left, right, _ = self._sections
        width = np.hypot(*(right - left).T)
        frac = np.clip(CELL_INSET / np.maximum(width, 1e-9), 0.0, 0.49)[:, None]
        li = left + frac * (right - left)
        ri = right + frac * (left - right)
        rings = np.stack([li[:-1], ri[:-1], ri[1:], li[1:]], axis=1)
        return shapely.polygons(rings)

    def strip(self, s0: float, s1: float) -> Polygon:
        """Full-width lane polygon between arc lengths ``s0`` and ``s1``."""
        left, right, _ = self._sections
        cum = self.section_s
        s0, s1 = max(0.0, s0), min(self.length, s1)
        inner = cum[(cum > s0) & (cum < s1)]
        s = np.concatenate([[s0], inner, [s1]])
        lp = _interp_polyline(left, cum, s)
        rp = _interp_polyline(right, cum, s)
        poly = Polygon(np.vstack([lp, rp[::-1]]))
        if not poly.is_valid:
            poly = shapely.make_valid(poly)
        return poly

    def contains_state(self, x: float, y: float, v: float) -> bool:
        """Membership in the valid-state set: inside the lane and within v_max."""
        return v <= self.v_max and bool(shapely.intersects_xy(self.polygon, x, y))


def lanelet_region(lanelet: Lanelet) -> RegionSet:
    return RegionSet(lanelet.polygon)


def centerline(lanelet: Lanelet) -> ReferencePath:
    return lanelet.centerline


def frenet_project(p, ref: ReferencePath) -> tuple[float, float]:
    return ref.frenet_project(p)


class LaneletNetwork:
    """Lanelets keyed by id with successor and predecessor links."""

    def __init__(self, lanelets: Iterable[Lanelet]):
        self.lanelets: dict[str, Lanelet] = {}
        for l in lanelets:
            if l.id in self.lanelets:
                raise InvalidLaneletError(f"duplicate lanelet id {l.id!r}")
            self.lanelets[l.id] = l
        self.predecessors: dict[str, list[str]] = {lid: [] for lid in self.lanelets}
        for l in self.lanelets.values():
            for sid in l.successors:
                if sid not in self.lanelets:
                    raise InvalidLaneletError(
                        f"lanelet {l.id}: successor {sid!r} does not exist")
                self.predecessors[sid].append(l.id)

    def __getitem__(self, lid: str) -> Lanelet:
        return self.lanelets[lid]

    def __iter__(self):
        return iter(self.lanelets.values())

    def __len__(self) -> int:
        return len(self.lanelets)

    @property
    def ids(self) -> list[str]:
        return list(self.lanelets)

    def validate(self) -> list[str]:
        """Return a list of violated invariants (empty when valid)."""
        problems = []
        for l in self:
            try:
                l.polygon
            except InvalidLaneletError as exc:
                problems.append(str(exc))
                continue
            for sid in l.successors:
                succ = self.lanelets[sid]
                gap = max(np.hypot(*(l.left_boundary[-1] - succ.left_boundary[0])),
                          np.hypot(*(l.right_boundary[-1] - succ.right_boundary[0])))
                if gap > CONTINUITY_TOL:
                    problems.append(
                        f"lanelet {l.id}: end does not meet start of successor {sid} "
                        f"(gap {gap:.3f} m)")
        return problems

    @cached_property
    def road_area(self) -> RegionSet:
        return RegionSet.from_polygons(l.polygon for l in self)

    def locate(self, x: float, y: float, theta: float | None = None,
               max_heading_error: float = math.pi / 3) -> tuple[Lanelet, float, float] | None:
        """Vehicle lanelet best matching a pose, with Frenet ``(s, d)`` on its centerline."""
        best = None
        for l in self:
            if l.lane_type != "vehicle":
                continue
            if not shapely.intersects_xy(l.polygon, x, y):
                continue
            s, d = l.centerline.frenet_project((x, y))
            if theta is not None:
                err = abs((theta - float(l.centerline.heading_at(s)) + math.pi)
                          % (2 * math.pi) - math.pi)
                if err > max_heading_error:
                    continue
            else:
                err = 0.0
            key = (err, abs(d), l.id)
            if best is None or key < best[0]:
                best = (key, l, s, d)
        if best is None:
            return None
        return best[1], best[2], best[3]

    def follow(self, lid: str, s: float, distance: float) -> np.ndarray:
        """Centerline points from ``(lid, s)`` onward for ``distance`` metres.

        Takes the first successor at each lanelet end; extrapolates straight
        past a dead end.
        """
        pieces = []
        remaining = distance
        lane = self.lanelets[lid]
        visited = set()
        while True:
            cl = lane.centerline
            end = min(cl.length, s + remaining)
            pieces.append(cl.slice(s, end))
            remaining -= end - s
            visited.add(lane.id)
            if remaining <= 1e-9:
                break
            nxt = [sid for sid in lane.successors if sid not in visited]
            if not nxt:
                last = cl.points[-1]
                heading = float(cl.heading_at(cl.length))
                pieces.append(np.array([last + remaining * np.array(
                    [math.cos(heading), math.sin(heading)])]))
                break
            lane = self.lanelets[nxt[0]]
            s = 0.0
        pts = np.vstack(pieces)
        keep = np.concatenate([[True], np.hypot(*np.diff(pts, axis=0).T) > 1e-9])
        return pts[keep]


def straight_lanelet(lid: str, start, end, width: float, **kw) -> Lanelet:
    """Lanelet of constant width between two centre points."""
    start, end = np.asarray(start, float), np.asarray(end, float)
    t = (end - start) / np.hypot(*(end - start))
    n = np.array([-t[1], t[0]]) * 0.5 * width
    return Lanelet(lid, np.array([start + n, end + n]), np.array([start - n, end - n]), **kw)


def arc_lanelet(lid: str, centre, radius: float, width: float, a0: float, a1: float,
                n: int = 64, **kw) -> Lanelet:
    """Lanelet following a circular arc from angle ``a0`` to ``a1`` (radians)."""
    ang = np.linspace(a0, a1, n)
    c = np.asarray(centre, float)
    unit = np.column_stack([np.cos(ang), np.sin(ang)])
    inner, outer = c + (radius - 0.5 * width) * unit, c + (radius + 0.5 * width) * unit
    # counter-clockwise travel keeps the centre on the left
    if a1 > a0:
        return Lanelet(lid, inner, outer, **kw)
    return Lanelet(lid, outer, inner, **kw)


def polyline_length(points: Sequence) -> float:
    return float(_cumulative(np.asarray(points, dtype=float))[-1])
