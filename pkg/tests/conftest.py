import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from occplan.road import LaneletNetwork, straight_lanelet

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def segment_hits_convex(ox, oy, px, py, poly_xy):
    """Vectorised test: does segment origin->p cross the interior of a convex polygon?

    Liang-Barsky clipping against the polygon's half-planes; a strictly
    positive clipped length means the segment passes through the interior.
    """
    px = np.asarray(px, float)
    py = np.asarray(py, float)
    dx, dy = px - ox, py - oy
    t0 = np.zeros_like(px)
    t1 = np.ones_like(px)
    ring = np.asarray(poly_xy, float)
    # orient counter-clockwise
    area2 = np.sum(ring[:, 0] * np.roll(ring[:, 1], -1) - np.roll(ring[:, 0], -1) * ring[:, 1])
    if area2 < 0:
        ring = ring[::-1]
    for i in range(len(ring)):
        ax, ay = ring[i]
        bx, by = ring[(i + 1) % len(ring)]
        nx, ny = by - ay, -(bx - ax)          # outward normal of a CCW edge
        num = (ax - ox) * nx + (ay - oy) * ny  # inside iff n.(q - a) <= 0
        den = dx * nx + dy * ny
        with np.errstate(divide="ignore", invalid="ignore"):
            t = num / den
        entering = den < 0
        leaving = den > 0
        t0 = np.where(entering, np.maximum(t0, t), t0)
        t1 = np.where(leaving, np.minimum(t1, t), t1)
        parallel_out = (den == 0) & (num < 0)
        t1 = np.where(parallel_out, -1.0, t1)
    length = np.hypot(dx, dy)
    return (t1 - t0) * length > 1e-9


def rect(x0, y0, x1, y1):
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


@pytest.fixture
def straight_net():
    """Single eastbound 3 m lane from x=0 to x=100 with a 20 m successor."""
    a = straight_lanelet("a", (0, 1.5), (100, 1.5), 3.0, v_max=10.0, successors=["b"])
    b = straight_lanelet("b", (100, 1.5), (120, 1.5), 3.0, v_max=10.0)
    return LaneletNetwork([a, b])


def rotate(points, angle):
    c, s = math.cos(angle), math.sin(angle)
    pts = np.asarray(points, float)
    return np.column_stack([c * pts[:, 0] - s * pts[:, 1], s * pts[:, 0] + c * pts[:, 1]])


def mini_doc(**kw):
    """Small straight two-lane scenario document; keyword arguments override fields."""
    from occplan.scenario import SCHEMA
    doc = {
        "schema": SCHEMA, "name": "mini", "dt": 0.1, "duration": 3.0, "sensor_range": 50.0,
        "mode": "phantom_with_tracking", "r_max": 0.1,
        "reference_path": [[0.0, -1.75], [200.0, -1.75]],
        "ego": {"s": 5.0, "v": 10.0},
        "lanelets": [
            {"id": "east", "type": "vehicle", "v_max": 13.9,
             "left": [[0.0, 0.0], [200.0, 0.0]], "right": [[0.0, -3.5], [200.0, -3.5]]},
            {"id": "west", "type": "vehicle", "v_max": 13.9,
             "left": [[200.0, 0.0], [0.0, 0.0]], "right": [[200.0, 3.5], [0.0, 3.5]]},
        ],
        "static_obstacles": [{"id": "parked", "polygon": [[40, 0.5], [44.6, 0.5], [44.6, 2.4],
                                                          [40, 2.4]]}],
        "dynamic_obstacles": [],
    }
    doc.update(kw)
    return doc
