"""Planar polygon primitives, region algebra and shadow-casting visibility.

Polygons are plain :class:`shapely.geometry.Polygon` objects, validated and
oriented counter-clockwise by :func:`make_polygon`.  A :class:`RegionSet`
wraps a (multi)polygon and keeps it snapped to a fine grid with slivers
removed, so that chains of boolean operations stay well conditioned.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np
import shapely
from shapely.geometry import MultiPolygon, Point, Polygon
from shapely.geometry.base import BaseGeometry
from shapely.geometry.polygon import orient

#: grid used for snap rounding before boolean operations [m]
SNAP_GRID = 1e-9
#: parts smaller than this are dropped as numerical slivers [m^2]
EPS_AREA = 1e-6
DEFAULT_N_ARC = 360


class GeometryError(ValueError):
    """Raised for invalid polygon input."""


class SensingError(GeometryError):
    """Raised when the sensor origin lies inside an obstacle."""


def make_polygon(vertices) -> Polygon:
    """Build a validated, counter-clockwise polygon from an ``(n, 2)`` array."""
    pts = np.asarray(vertices, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise GeometryError("polygon needs at least 3 two-dimensional vertices")
    if not np.all(np.isfinite(pts)):
        raise GeometryError("polygon vertices must be finite")
    if np.allclose(pts[0], pts[-1]) and len(pts) > 3:
        pts = pts[:-1]
    poly = Polygon(pts)
    if not poly.exterior.is_simple:
        raise GeometryError("polygon boundary is self-intersecting")
    if poly.area <= 0.0:
        raise GeometryError("polygon has no area")
    return orient(poly, sign=1.0)


def _clean(geom: BaseGeometry | None) -> BaseGeometry:
    if geom is None or geom.is_empty:
        return Polygon()
    if not geom.is_valid:
        geom = shapely.make_valid(geom)
    geom = shapely.set_precision(geom, SNAP_GRID)
    parts = [p for p in _iter_polygons(geom) if p.area >= EPS_AREA]
    if not parts:
        return Polygon()
    if len(parts) == 1:
        return orient(parts[0], sign=1.0)
    return MultiPolygon([orient(p, sign=1.0) for p in parts])


def _iter_polygons(geom: BaseGeometry):
    if geom.is_empty:
        return
    if isinstance(geom, Polygon):
        yield geom
    elif hasattr(geom, "geoms"):
        for g in geom.geoms:
            yield from _iter_polygons(g)


class RegionSet:
    """A planar region made of pairwise interior-disjoint polygons.

    Member polygons may carry holes (e.g. a square with a square cut out).
    Instances are immutable; the boolean operators return new sets.
    """

    __slots__ = ("_geom", "_prepared")

    def __init__(self, geom: BaseGeometry | None = None, *, clean: bool = True):
        self._geom = _clean(geom) if clean else (geom if geom is not None else Polygon())
        self._prepared = False

    @classmethod
    def from_polygons(cls, polygons: Iterable[Polygon]) -> "RegionSet":
        polys = [p for p in polygons if p is not None and not p.is_empty]
        if not polys:
            return cls()
        return cls(shapely.union_all(polys))

    @classmethod
    def empty(cls) -> "RegionSet":
        return cls()

    @property
    def geom(self) -> BaseGeometry:
        return self._geom

    @property
    def polygons(self) -> list[Polygon]:
        return list(_iter_polygons(self._geom))

    @property
    def area(self) -> float:
        return float(self._geom.area)

    @property
    def is_empty(self) -> bool:
        return self._geom.is_empty

    def prepared(self) -> BaseGeometry:
        if not self._prepared:
            shapely.prepare(self._geom)
            self._prepared = True
        return self._geom

    def union(self, other: "RegionSet") -> "RegionSet":
        return boolean(self, other, "union")

    def intersection(self, other: "RegionSet") -> "RegionSet":
        return boolean(self, other, "intersection")

    def difference(self, other: "RegionSet") -> "RegionSet":
        return boolean(self, other, "difference")

    __or__ = union
    __and__ = intersection
    __sub__ = difference

    def contains_xy(self, x, y) -> np.ndarray:
        """Vectorised closed-set membership test."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.is_empty:
            return np.zeros(np.broadcast(x, y).shape, dtype=bool)
        return shapely.intersects_xy(self.prepared(), x, y)

    def covers(self, geoms) -> np.ndarray:
        if self.is_empty:
            return np.zeros(len(geoms), dtype=bool)
        return shapely.covers(self.prepared(), geoms)

    def intersects(self, geom: BaseGeometry) -> bool:
        return not self.is_empty and bool(shapely.intersects(self.prepared(), geom))

    def __repr__(self) -> str:
        return f"RegionSet(n_polygons={len(self.polygons)}, area={self.area:.3f})"


def area(region: RegionSet) -> float:
    return region.area


def boolean(a: RegionSet, b: RegionSet, op: str) -> RegionSet:
    """Union, intersection or difference of two region sets."""
    if op == "union":
        if b.is_empty:
            return a
        if a.is_empty:
            return b
        return RegionSet(shapely.union(a.geom, b.geom))
    if op == "intersection":
        if a.is_empty or b.is_empty:
            return RegionSet()
        return RegionSet(shapely.intersection(a.geom, b.geom))
    if op == "difference":
        if a.is_empty or b.is_empty:
            return a
        return RegionSet(shapely.difference(a.geom, b.geom))
    raise ValueError(f"unknown boolean operation {op!r}")


def sensor_disc(origin, range_: float, n_arc: int = DEFAULT_N_ARC) -> RegionSet:
    """Regular ``n_arc``-gon inscribed in the sensor range circle."""
    return RegionSet(_disc_polygon(origin, range_, n_arc))


def _disc_polygon(origin, range_: float, n_arc: int) -> Polygon:
    if not range_ > 0.0:
        raise GeometryError(f"sensor range must be positive, got {range_}")
    if n_arc < 3:
        raise GeometryError("n_arc must be at least 3")
    ox, oy = origin
    ang = np.arange(n_arc) * (2.0 * math.pi / n_arc)
    return Polygon(np.column_stack([ox + range_ * np.cos(ang), oy + range_ * np.sin(ang)]))


def _is_convex(poly: Polygon) -> bool:
    return poly.convex_hull.area - poly.area <= 1e-9 * max(1.0, poly.area)


def _convex_parts(poly: Polygon) -> list[Polygon]:
    if _is_convex(poly):
        return [poly]
    tris = shapely.constrained_delaunay_triangles(poly)
    return [t for t in tris.geoms if t.area > 0.0]


def _convex_shadow(origin, part: Polygon, far: float) -> Polygon:
    ox, oy = origin
    verts = np.asarray(part.exterior.coords)[:-1]
    rel = verts - (ox, oy)
    centre = rel.mean(axis=0)
    base = math.atan2(centre[1], centre[0])
    ang = np.arctan2(rel[:, 1], rel[:, 0]) - base
    ang = (ang + math.pi) % (2.0 * math.pi) - math.pi
    ia, ib = int(np.argmin(ang)), int(np.argmax(ang))
    a0, a1 = base + ang[ia], base + ang[ib]
    # chords of the far arc must stay outside the sensor range: step <= 30 deg
    n = int(math.ceil((a1 - a0) / (math.pi / 6.0))) + 1
    arc = np.linspace(a0, a1, max(n, 2))
    far_pts = np.column_stack([ox + far * np.cos(arc), oy + far * np.sin(arc)])
    ring = np.vstack([verts[ia], far_pts, verts[ib]])
    wedge = Polygon(ring)
    if not wedge.is_valid:
        wedge = shapely.make_valid(wedge)
    return shapely.union(wedge, part)


def obstacle_shadow(origin, obstacle: Polygon, range_: float,
                    n_arc: int = DEFAULT_N_ARC) -> BaseGeometry:
    """Region hidden by ``obstacle`` from ``origin`` within the sensor range.

    The result contains the obstacle itself (clipped to the range) plus its
    umbra.  Non-convex obstacles are split into convex pieces first and the
    piece shadows are merged.
    """
    ox, oy = float(origin[0]), float(origin[1])
    if obstacle.covers(Point(ox, oy)):
        raise SensingError(f"sensor origin ({ox:.3f}, {oy:.3f}) lies inside an obstacle")
    disc = _disc_polygon((ox, oy), range_, n_arc)
    if not disc.intersects(obstacle):
        return Polygon()
    reach = max(math.hypot(x - ox, y - oy) for x, y in obstacle.exterior.coords)
    far = 2.0 * (range_ + reach)
    parts = [_convex_shadow((ox, oy), p, far) for p in _convex_parts(obstacle)]
    shadow = shapely.union_all(parts) if len(parts) > 1 else parts[0]
    return shapely.intersection(shadow, disc)


def visible_region(origin, range_: float, road_area: RegionSet,
                   obstacles: Sequence[Polygon], n_arc: int = DEFAULT_N_ARC) -> RegionSet:
    """Road area within sensor range that has line of sight to ``origin``."""
    disc = _disc_polygon(origin, range_, n_arc)
    seen = shapely.intersection(road_area.geom, disc)
    shadows = [obstacle_shadow(origin, o, range_, n_arc) for o in obstacles]
    shadows = [s for s in shadows if not s.is_empty]
    if shadows:
        seen = shapely.difference(seen, shapely.union_all(shadows))
    return RegionSet(seen)


def oriented_box(x: float, y: float, theta: float, length: float, width: float) -> Polygon:
    """Rectangle centred at ``(x, y)`` with its long axis along ``theta``."""
    c, s = math.cos(theta), math.sin(theta)
    hl, hw = 0.5 * length, 0.5 * width
    corners = [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)]
    return Polygon([(x + c * u - s * v, y + s * u + c * v) for u, v in corners])
