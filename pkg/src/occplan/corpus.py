"""Bundled scenario corpus.

Four hand-built scenes plus randomized-geometry variants drawn from a seed:

* ``intersection_occluded_vehicle``: crossing traffic passes behind a
  building on its way to a four-way intersection.
* ``t_junction``: left turn out of a side street past a stationary truck
  and a parked car.
* ``t_junction_cyclist``: the same junction with a real cyclist hidden
  behind the truck.
* ``straight_parked``: two-lane road lined with parked vehicles.
* ``random_<k>``: perturbed junction/straight-road variants.

Geometries are reconstructions; only their qualitative layout matters.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .road import arc_lanelet, straight_lanelet
from .scenario import SCHEMA, dump_scenario, load_scenario, scenario_from_dict

LANE_W = 3.5
WALK_W = 3.0
V_CITY = 13.9
V_WALK = 2.5

BUNDLED = ("intersection_occluded_vehicle", "t_junction", "t_junction_cyclist", "straight_parked")
N_RANDOM = 3


def _lane_doc(lane, kind="vehicle", v_max=V_CITY, successors=()):
    return {"id": lane.id, "type": kind, "v_max": v_max,
            "left": np.asarray(lane.left_boundary).tolist(),
            "right": np.asarray(lane.right_boundary).tolist(),
            "successors": list(successors)}


def _straight(lid, a, b, width=LANE_W, kind="vehicle", v_max=None, successors=()):
    v = V_CITY if kind == "vehicle" else V_WALK
    return _lane_doc(straight_lanelet(lid, a, b, width), kind, v_max or v, successors)


def _arc(lid, c, r, a0, a1, width=LANE_W, successors=(), n=24):
    return _lane_doc(arc_lanelet(lid, c, r, width, a0, a1, n=n), "vehicle", V_CITY, successors)


def _rect(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def _box(x, y, theta, length, width):
    c, s = math.cos(theta), math.sin(theta)
    hl, hw = 0.5 * length, 0.5 * width
    return [[x + c * u - s * v, y + s * u + c * v]
            for u, v in ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw))]


def _base(name, **kw):
    doc = {"schema": SCHEMA, "name": name, "dt": 0.1, "duration": 20.0, "sensor_range": 50.0,
           "mode": "phantom_with_tracking", "r_max": 0.1, "object_tracking": None}
    doc.update(kw)
    return doc


# --- four-way intersection -----------------------------------------------------

def intersection_occluded_vehicle(building=(-15.0, 5.0, -8.0, 14.0), other_speed=8.0,
                                  other_start=25.0, ego_start=-40.0, ego_speed=10.0,
                                  r_max=0.02, phantom_classes=()):
    """Ego drives east; a vehicle heading south is briefly hidden by a small building.

    The crossing car is seen at the start, disappears behind the building while
    the conflict enters the planning horizon and reappears shortly before the
    junction.  Phantoms are off by default so only object memory differs
    between runs with and without tracking.
    """
    h = LANE_W
    lanes = [
        _straight("e_in", (-120, -h / 2), (-h, -h / 2), successors=["e_mid"]),
        _straight("e_mid", (-h, -h / 2), (h, -h / 2), successors=["e_out"]),
        _straight("e_out", (h, -h / 2), (120, -h / 2)),
        _straight("w_all", (120, h / 2), (-120, h / 2)),
        _straight("s_in", (-h / 2, 120), (-h / 2, h), successors=["s_mid"]),
        _straight("s_mid", (-h / 2, h), (-h / 2, -h), successors=["s_out"]),
        _straight("s_out", (-h / 2, -h), (-h / 2, -120)),
        _straight("n_all", (h / 2, -120), (h / 2, 120)),
    ]
    bx0, by0, bx1, by1 = building
    doc = _base("intersection_occluded_vehicle", duration=12.0, r_max=r_max,
                reference_path=[[-120, -h / 2], [120, -h / 2]],
                ego={"x": ego_start, "y": -h / 2, "v": ego_speed},
                lanelets=lanes,
                static_obstacles=[{"id": "building", "polygon": _rect(bx0, by0, bx1, by1)}],
                dynamic_obstacles=[{"id": "crossing_car", "class": "vehicle", "length": 4.5,
                                    "width": 1.8, "path": [[-h / 2, other_start], [-h / 2, -120]],
                                    "speed_profile": [[0.0, other_speed]]}],
                phantoms={"classes": list(phantom_classes)})
    return doc


# --- T-junction ----------------------------------------------------------------

def _t_junction_lanes(r_turn=9.0, main_w=(-120.0, 80.0), stem_len=90.0):
    """Main road along y in [-w, w]; side street from the south, centre x = 0."""
    h = LANE_W
    x_lo, x_hi = main_w
    # arc centre: the turn starts on the stem centreline and ends on the westbound one
    cx, cy = -r_turn + h / 2, h / 2 - r_turn
    lanes = [
        _straight("n_stem", (h / 2, -stem_len), (h / 2, cy), successors=["turn_left"]),
        _arc("turn_left", (cx, cy), r_turn, 0.0, math.pi / 2, successors=["w_out"]),
        _straight("w_out", (cx, h / 2), (x_lo, h / 2)),
        _straight("w_in", (x_hi, h / 2), (cx, h / 2), successors=["w_out"]),
        _straight("e_in", (x_lo, -h / 2), (-h, -h / 2), successors=["e_mid"]),
        _straight("e_mid", (-h, -h / 2), (h, -h / 2), successors=["e_out"]),
        _straight("e_out", (h, -h / 2), (x_hi, -h / 2)),
        _straight("s_stem", (-h / 2, -h), (-h / 2, -stem_len)),
        _straight("walk_north", (x_lo, h + WALK_W / 2), (x_hi, h + WALK_W / 2),
                  WALK_W, "sidewalk"),
        _straight("walk_sw", (x_lo, -h - WALK_W / 2), (-h - WALK_W, -h - WALK_W / 2),
                  WALK_W, "sidewalk"),
        _straight("walk_se", (h + WALK_W, -h - WALK_W / 2), (x_hi, -h - WALK_W / 2),
                  WALK_W, "sidewalk"),
    ]
    ref = [[h / 2, -stem_len], [h / 2, cy]]
    ang = np.linspace(0.0, math.pi / 2, 24)[1:]
    ref += [[cx + r_turn * math.cos(t), cy + r_turn * math.sin(t)] for t in ang]
    ref += [[x_lo, h / 2]]
    return lanes, ref, (cx, cy)


def t_junction(truck=(-3.2, -20.0, -0.7, -7.5), parked=(-34.0, 4.0, -29.5, 5.9),
               building=(-60.0, -60.0, -6.0, -7.0), ego_y=-70.0, ego_speed=10.0, cyclist=None,
               name="t_junction", r_max=0.1, r_turn=9.0):
    """Left turn from the side street past a truck standing in the opposite stem lane.

    A corner building blocks the view west until the ego reaches the junction;
    a car is parked on the far sidewalk after the turn.
    """
    lanes, ref, _ = _t_junction_lanes(r_turn)
    statics = [{"id": "truck", "polygon": _rect(*truck)},
               {"id": "parked_car", "polygon": _rect(*parked)},
               {"id": "building", "polygon": _rect(*building)}]
    doc = _base(name, duration=20.0, r_max=r_max, reference_path=ref,
                ego={"x": LANE_W / 2, "y": ego_y, "v": ego_speed},
                lanelets=lanes, static_obstacles=statics, dynamic_obstacles=[])
    if cyclist is not None:
        x0, speed, t_go = cyclist
        doc["dynamic_obstacles"].append(
            {"id": "cyclist", "class": "cyclist", "length": 1.8, "width": 0.7,
             "path": [[x0, -LANE_W / 2], [80.0, -LANE_W / 2]],
             "speed_profile": ([[0.0, 0.0], [t_go, 0.0], [t_go + 0.5, speed]] if t_go > 0
                               else [[0.0, speed]])})
    return doc


def t_junction_cyclist(**kw):
    kw.setdefault("cyclist", (-50.0, 6.0, 0.0))
    return t_junction(name="t_junction_cyclist", **kw)


# --- straight road -------------------------------------------------------------

def straight_parked(parked=((35.0, -1), (70.0, 1), (95.0, -1)), name="straight_parked",
                    ego_speed=10.0, length=200.0):
    h = LANE_W
    lanes = [
        _straight("east", (0, -h / 2), (length, -h / 2)),
        _straight("west", (length, h / 2), (0, h / 2)),
        _straight("walk_north", (0, h + WALK_W / 2), (length, h + WALK_W / 2), WALK_W, "sidewalk"),
        _straight("walk_south", (0, -h - WALK_W / 2), (length, -h - WALK_W / 2), WALK_W,
                  "sidewalk"),
    ]
    statics = []
    for i, (x, side) in enumerate(parked):
        y = side * (h + 1.0)
        statics.append({"id": f"parked_{i}", "polygon": _box(x, y, 0.0, 4.6, 1.9)})
    return _base(name, duration=15.0, r_max=0.1, reference_path=[[0, -h / 2], [length, -h / 2]],
                 ego={"x": 5.0, "y": -h / 2, "v": ego_speed}, lanelets=lanes,
                 static_obstacles=statics, dynamic_obstacles=[])


# --- randomized variants -----------------------------------------------------

def randomized(seed: int, k: int) -> dict:
    """Variant ``k`` of a seeded family alternating junction and straight-road layouts."""
    rng = np.random.default_rng([seed, k])
    if k % 2 == 0:
        tx0 = -rng.uniform(8.0, 12.0)
        ty0 = -rng.uniform(12.0, 18.0)
        truck = (tx0, ty0, tx0 + rng.uniform(3.0, 4.0), -4.2)
        px = -rng.uniform(28.0, 40.0)
        parked = (px, 4.0, px + 4.5, 5.9)
        doc = t_junction(truck=truck, parked=parked, ego_speed=float(rng.uniform(8.0, 12.0)),
                         name=f"random_{k}", r_turn=float(rng.uniform(8.0, 11.0)))
    else:
        xs = np.sort(rng.uniform(25.0, 120.0, size=int(rng.integers(2, 5))))
        sides = rng.choice([-1, 1], size=len(xs))
        doc = straight_parked(parked=tuple((float(x), int(s)) for x, s in zip(xs, sides)),
                              name=f"random_{k}", ego_speed=float(rng.uniform(8.0, 12.0)))
    doc["seed"] = int(seed)
    return doc


def documents(seed: int = 7) -> dict[str, dict]:
    docs = {
        "intersection_occluded_vehicle": intersection_occluded_vehicle(),
        "t_junction": t_junction(),
        "t_junction_cyclist": t_junction_cyclist(),
        "straight_parked": straight_parked(),
    }
    for k in range(N_RANDOM):
        docs[f"random_{k}"] = randomized(seed, k)
    return docs


def write_corpus(out_dir, seed: int = 7) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, doc in documents(seed).items():
        scenario_from_dict(doc)
        path = out_dir / f"{name}.yaml"
        dump_scenario(doc, path)
        paths.append(path)
    return paths


def bundled_dir() -> Path:
    return Path(__file__).parent / "scenarios"


def bundled_path(name: str) -> Path:
    path = bundled_dir() / f"{name}.yaml"
    if not path.exists():
        raise FileNotFoundError(f"no bundled scenario named {name!r}")
    return path


def load_bundled(name: str):
    return load_scenario(bundled_path(name))


def bundled_names() -> list[str]:
    return sorted(p.stem for p in bundled_dir().glob("*.yaml"))
