import math

import numpy as np
import pytest
import shapely
from hypothesis import given, strategies as st
from shapely.geometry import Point, Polygon, box

from occplan.geometry import (GeometryError, RegionSet, SensingError, area, boolean,
                              make_polygon, obstacle_shadow, oriented_box, sensor_disc,
                              visible_region)

from conftest import rect, rotate, segment_hits_convex


def _square(x0, y0, x1, y1):
    return RegionSet(box(x0, y0, x1, y1))


# --- polygons and region algebra ------------------------------------------------

def test_make_polygon_orients_counter_clockwise():
    poly = make_polygon([(0, 0), (0, 1), (1, 1), (1, 0)])
    assert poly.exterior.is_ccw
    assert poly.area == pytest.approx(1.0)


@pytest.mark.parametrize("verts", [
    [(0, 0), (1, 1)],
    [(0, 0), (1, 0), (2, 0)],
    [(0, 0), (1, 1), (1, 0), (0, 1)],
    [(0, 0), (1, 0), (math.nan, 1)],
])
def test_make_polygon_rejects_degenerate_input(verts):
    with pytest.raises(GeometryError):
        make_polygon(verts)


def test_area_unit_square_and_empty():
    assert area(_square(0, 0, 1, 1)) == pytest.approx(1.0)
    assert area(RegionSet()) == 0.0


def test_area_square_with_hole():
    r = boolean(_square(0, 0, 10, 10), _square(2, 2, 4, 4), "difference")
    assert area(r) == pytest.approx(96.0)
    assert len(r.polygons) == 1 and len(r.polygons[0].interiors) == 1


def test_boolean_identities():
    a = _square(0, 0, 2, 2)
    assert boolean(a, a, "intersection").area == pytest.approx(a.area)
    assert boolean(a, a, "difference").is_empty
    assert boolean(a, _square(1, 0, 3, 2), "union").area == pytest.approx(6.0)


def test_boolean_rejects_unknown_op():
    with pytest.raises(ValueError):
        boolean(RegionSet(), RegionSet(), "xor")


def test_region_members_are_disjoint_and_areas_add_up():
    r = RegionSet.from_polygons([box(0, 0, 2, 2), box(1, 1, 3, 3), box(5, 5, 6, 6)])
    polys = r.polygons
    assert sum(p.area for p in polys) == pytest.approx(r.area)
    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            assert polys[i].intersection(polys[j]).area < 1e-9
    assert r.area == pytest.approx(4 + 4 - 1 + 1)


boxes = st.tuples(st.floats(-10, 10), st.floats(-10, 10), st.floats(0.1, 8), st.floats(0.1, 8))


@given(boxes, boxes)
def test_inclusion_exclusion(b1, b2):
    a = _square(b1[0], b1[1], b1[0] + b1[2], b1[1] + b1[3])
    b = _square(b2[0], b2[1], b2[0] + b2[2], b2[1] + b2[3])
    lhs = (a | b).area
    rhs = a.area + b.area - (a & b).area
    assert lhs == pytest.approx(rhs, abs=1e-5)


@given(boxes, boxes, boxes)
def test_difference_antitone_in_second_argument(b1, b2, b3):
    a = _square(b1[0], b1[1], b1[0] + b1[2], b1[1] + b1[3])
    b = _square(b2[0], b2[1], b2[0] + b2[2], b2[1] + b2[3])
    c = _square(b3[0], b3[1], b3[0] + b3[2], b3[1] + b3[3])
    assert (a - (b | c)).area <= (a - b).area + 1e-6


def test_contains_xy_is_closed_and_vectorised():
    r = _square(0, 0, 1, 1)
    got = r.contains_xy([0.5, 1.0, 1.5], [0.5, 0.5, 0.5])
    assert got.tolist() == [True, True, False]
    assert RegionSet().contains_xy([0.0], [0.0]).tolist() == [False]


# --- sensor disc ------------------------------------------------------------------

def test_sensor_disc_area_bounds():
    assert sensor_disc((0, 0), 10, 360).area == pytest.approx(math.pi * 100, rel=1e-3)
    assert sensor_disc((0, 0), 10, 4).area == pytest.approx(200.0)


def test_sensor_disc_translation():
    a = np.asarray(sensor_disc((0, 0), 10, 12).polygons[0].exterior.coords)
    b = np.asarray(sensor_disc((5, 5), 10, 12).polygons[0].exterior.coords)
    assert np.allclose(np.sort(b, axis=0), np.sort(a + 5.0, axis=0))


@pytest.mark.parametrize("r, n", [(0.0, 12), (-1.0, 12), (10.0, 2)])
def test_sensor_disc_rejects_bad_parameters(r, n):
    with pytest.raises(GeometryError):
        sensor_disc((0, 0), r, n)


# --- shadows ------------------------------------------------------------------------

def _ray_blocked(origin, target, obstacle_xy, step_deg=0.1):
    # independent oracle: march along the ray at fine resolution
    ox, oy = origin
    tx, ty = target
    n = 4000
    t = np.linspace(0.0, 1.0, n)
    pts = np.column_stack([ox + t * (tx - ox), oy + t * (ty - oy)])
    poly = Polygon(obstacle_xy)
    return bool(np.any(shapely.contains_xy(poly, pts[:, 0], pts[:, 1])))


def test_shadow_of_square_matches_ray_casting():
    obstacle = rect(2, -0.5, 3, 0.5)
    shadow = obstacle_shadow((0, 0), Polygon(obstacle), 10.0)
    assert _ray_blocked((0, 0), (5, 0), obstacle)
    assert not _ray_blocked((0, 0), (5, 3), obstacle)
    assert shadow.covers(Point(5, 0))
    assert not shadow.covers(Point(5, 3))


def test_shadow_out_of_range_is_empty():
    assert obstacle_shadow((0, 0), box(20, 0, 21, 1), 10.0).is_empty


def test_shadow_origin_inside_obstacle_raises():
    with pytest.raises(SensingError):
        obstacle_shadow((0.5, 0.5), box(0, 0, 1, 1), 10.0)


def test_shadow_rotation_equivariance():
    obstacle = np.array(rect(2, -0.5, 3, 1.0))
    s0 = obstacle_shadow((0, 0), Polygon(obstacle), 10.0, n_arc=720)
    s1 = obstacle_shadow((0, 0), Polygon(rotate(obstacle, math.pi / 2)), 10.0, n_arc=720)
    s0_rot = shapely.affinity.rotate(s0, 90, origin=(0, 0))
    assert s1.symmetric_difference(s0_rot).area < 1e-3 * s1.area


def test_non_convex_obstacle_shadow_covers_both_arms():
    # L-shaped occluder: both arms must cast shadows
    ell = Polygon([(3, -2), (5, -2), (5, 2), (4, 2), (4, -1), (3, -1)])
    shadow = obstacle_shadow((0, 0), ell, 20.0)
    assert shadow.covers(Point(10, -3.5))     # behind the lower arm
    assert shadow.covers(Point(10, 2.0))      # behind the upright arm
    assert not shadow.covers(Point(10, 8))


# --- visibility ---------------------------------------------------------------------

def test_visible_region_unobstructed_is_road():
    road = _square(-5, -5, 5, 5)
    assert visible_region((0, 0), 20.0, road, []).area == pytest.approx(100.0)


def test_visible_region_disc_limited():
    road = _square(-50, -50, 50, 50)
    vis = visible_region((0, 0), 10.0, road, [], n_arc=720)
    assert vis.area == pytest.approx(math.pi * 100, rel=5e-3)


def test_visible_region_single_occluder_matches_grid_oracle():
    road = _square(-2, -4, 30, 4)
    occluder = rect(5, -1, 7, 1)
    vis = visible_region((0, 0), 25.0, road, [Polygon(occluder)], n_arc=720)
    h = 0.05
    xs, ys = np.meshgrid(np.arange(-2 + h / 2, 30, h), np.arange(-4 + h / 2, 4, h))
    xs, ys = xs.ravel(), ys.ravel()
    in_range = np.hypot(xs, ys) <= 25.0
    outside_occ = ~shapely.contains_xy(Polygon(occluder), xs, ys)
    seen = in_range & outside_occ & ~segment_hits_convex(0.0, 0.0, xs, ys, occluder)
    oracle_area = seen.sum() * h * h
    assert vis.area == pytest.approx(oracle_area, rel=0.01)


@given(st.floats(5, 40), st.floats(0.5, 10))
def test_visible_region_monotone_in_range(r, extra):
    road = _square(-30, -5, 60, 5)
    obstacles = [box(8, -1, 10, 1), box(20, 2, 25, 4)]
    small = visible_region((0, 0), r, road, obstacles)
    large = visible_region((0, 0), r + extra, road, obstacles)
    assert (small - large).area < 1e-6


@given(st.floats(3, 40), st.floats(-4, 4))
def test_visible_region_antitone_in_obstacles(x, y):
    road = _square(-30, -5, 60, 5)
    base = [box(8, -1, 10, 1)]
    more = base + [box(x, y, x + 1.5, y + 1.0)]
    fewer = visible_region((0, 0), 50, road, base)
    with_more = visible_region((0, 0), 50, road, more)
    assert (with_more - fewer).area < 1e-6


def test_oriented_box():
    b = oriented_box(1.0, 2.0, math.pi / 2, 4.0, 2.0)
    minx, miny, maxx, maxy = b.bounds
    assert (minx, miny, maxx, maxy) == pytest.approx((0.0, 0.0, 2.0, 4.0))
