"""Scenario files: YAML documents tagged with a schema id, SI units throughout.

Top-level keys::

    schema: occplan.scenario/v1
    name: str
    dt: 0.1                 # s
    duration: 20.0          # s, multiple of dt
    sensor_range: 50.0      # m
    mode: phantom_with_tracking   # baseline | phantom_only | phantom_with_tracking | omniscient
    r_max: 0.1              # or .inf / null for unrestricted
    object_tracking: null   # optional override of the mode default
    reference_path: [[x, y], ...]
    ego: {s: 0.0, v: 10.0}  # or {x, y, v}; placed on the reference path
    lanelets:
      - {id, type: vehicle|sidewalk, v_max, left: [[x, y], ...], right: [...], successors: [...]}
    static_obstacles:
      - {id, polygon: [[x, y], ...]}
    dynamic_obstacles:
      - {id, class: vehicle|cyclist|pedestrian, length, width,
         path: [[x, y], ...], speed_profile: [[t, v], ...]}
    planner: {...}          # PlannerConfig fields
    tracker: {...}          # TrackerParams fields
    phantoms: {classes: [...], profiles: {...}, ...}
    harm: {pedestrian: [v50, k], ...}
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml
from shapely.geometry import Polygon

from .geometry import GeometryError, make_polygon, oriented_box
from .phantoms import PhantomParams
from .planner import PlannerConfig
from .risk import HarmParams
from .road import AgentState, InvalidLaneletError, Lanelet, LaneletNetwork, ReferencePath
from .tracking import CLASSES, TrackerParams

SCHEMA = "occplan.scenario/v1"
MODES = ("baseline", "phantom_only", "phantom_with_tracking", "omniscient")


class ScenarioError(ValueError):
    """Scenario failed validation; ``problems`` lists ``(location, message)`` pairs."""

    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = problems
        super().__init__("; ".join(f"{loc}: {msg}" for loc, msg in problems))


class ScenarioParseError(ScenarioError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        loc = f"line {line}, column {column}" if line is not None else "document"
        super().__init__([(loc, message)])


@dataclass
class DynamicObstacle:
    """Scripted road user replayed along ``path`` with a piecewise-linear speed."""

    id: str
    cls: str
    path: np.ndarray
    speed_profile: np.ndarray      # (k, 2) rows of (t, v)
    length: float = 4.5
    width: float = 1.8

    def __post_init__(self):
        self._ref = ReferencePath(self.path)

    def travelled(self, t: float) -> float:
        tp, vp = self.speed_profile[:, 0], self.speed_profile[:, 1]
        if t <= tp[0]:
            return 0.0
        grid = np.concatenate([tp[tp < t], [t]])
        v = np.interp(grid, tp, vp)
        return float(np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(grid)))

    def state_at(self, t: float) -> AgentState:
        s = min(self.travelled(t), self._ref.length)
        xy = self._ref.point_at(s)
        theta = float(self._ref.heading_at(min(s, self._ref.length - 1e-9)))
        v = float(np.interp(t, self.speed_profile[:, 0], self.speed_profile[:, 1]))
        if s >= self._ref.length:
            v = 0.0
        return AgentState(float(xy[0]), float(xy[1]), theta, max(v, 0.0))

    def polygon_at(self, t: float) -> Polygon:
        st = self.state_at(t)
        return oriented_box(st.x, st.y, st.theta, self.length, self.width)


@dataclass
class Scenario:
    name: str
    network: LaneletNetwork
    reference_path: ReferencePath
    ego_init: AgentState
    static_obstacles: list[tuple[str, Polygon]] = field(default_factory=list)
    dynamic_obstacles: list[DynamicObstacle] = field(default_factory=list)
    sensor_range: float = 50.0
    dt: float = 0.1
    duration: float = 20.0
    mode: str = "phantom_with_tracking"
    r_max: float = math.inf
    object_tracking: bool | None = None
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    tracker: TrackerParams = field(default_factory=TrackerParams)
    phantoms: PhantomParams = field(default_factory=PhantomParams)
    harm: HarmParams = field(default_factory=HarmParams)
    n_arc: int = 360
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


def _pts(value, loc, problems, min_len=2):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        problems.append((loc, "expected a list of [x, y] pairs"))
        return None
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < min_len:
        problems.append((loc, f"expected at least {min_len} [x, y] pairs"))
        return None
    if not np.all(np.isfinite(arr)):
        problems.append((loc, "coordinates must be finite"))
        return None
    return arr


def _params(cls, data, loc, problems, convert=None):
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    for key in sorted(set(data) - known):
        problems.append((f"{loc}.{key}", "unknown parameter"))
        data.pop(key)
    if convert:
        data = convert(data)
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        problems.append((loc, str(exc)))
        return cls()


def _float(value, loc, problems, default=None):
    if value is None:
        return default
    try:
        return float(value)
    except (TypeError, ValueError):
        problems.append((loc, f"expected a number, got {value!r}"))
        return default


def scenario_from_dict(doc: dict) -> Scenario:
    """Build and validate a scenario; raises :class:`ScenarioError` listing every problem."""
    problems: list[tuple[str, str]] = []
    if not isinstance(doc, dict):
        raise ScenarioError([("document", "top level must be a mapping")])
    if doc.get("schema") != SCHEMA:
        problems.append(("schema", f"expected {SCHEMA!r}, got {doc.get('schema')!r}"))

    dt = _float(doc.get("dt", 0.1), "dt", problems, 0.1)
    duration = _float(doc.get("duration", 20.0), "duration", problems, 20.0)
    if not dt > 0:
        problems.append(("dt", "must be positive"))
    if not duration > 0:
        problems.append(("duration", "must be positive"))
    elif dt > 0 and abs(duration / dt - round(duration / dt)) > 1e-6:
        problems.append(("duration", "must be a multiple of dt"))
    sensor_range = _float(doc.get("sensor_range", 50.0), "sensor_range", problems, 50.0)
    if not sensor_range > 0:
        problems.append(("sensor_range", "must be positive"))
    mode = doc.get("mode", "phantom_with_tracking")
    if mode not in MODES:
        problems.append(("mode", f"must be one of {', '.join(MODES)}"))
    r_max = doc.get("r_max", math.inf)
    r_max = math.inf if r_max is None else _float(r_max, "r_max", problems, math.inf)
    if r_max < 0:
        problems.append(("r_max", "must be non-negative"))
    obj_tr = doc.get("object_tracking")
    if obj_tr is not None and not isinstance(obj_tr, bool):
        problems.append(("object_tracking", "must be true, false or null"))

    lanelets = []
    for i, ld in enumerate(doc.get("lanelets") or []):
        loc = f"lanelets[{i}]"
        if not isinstance(ld, dict):
            problems.append((loc, "expected a mapping"))
            continue
        left = _pts(ld.get("left"), f"{loc}.left", problems)
        right = _pts(ld.get("right"), f"{loc}.right", problems)
        if left is None or right is None:
            continue
        try:
            lane = Lanelet(ld.get("id", i), left, right, ld.get("type", "vehicle"),
                           float(ld.get("v_max", 13.9)), list(ld.get("successors") or []))
            lane.polygon
            lanelets.append(lane)
        except (InvalidLaneletError, TypeError, ValueError) as exc:
            problems.append((loc, f"invalid lanelet: {exc}"))
    if not lanelets:
        problems.append(("lanelets", "at least one valid lanelet is required"))
    network = None
    if lanelets:
        try:
            network = LaneletNetwork(lanelets)
            problems.extend(("lanelets", msg) for msg in network.validate())
        except InvalidLaneletError as exc:
            problems.append(("lanelets", str(exc)))

    ref = None
    ref_pts = _pts(doc.get("reference_path"), "reference_path", problems)
    if ref_pts is not None:
        try:
            ref = ReferencePath(ref_pts)
        except ValueError as exc:
            problems.append(("reference_path", str(exc)))

    ego = None
    ed = doc.get("ego") or {}
    v0 = _float(ed.get("v", 0.0), "ego.v", problems, 0.0)
    if v0 < 0:
        problems.append(("ego.v", "must be non-negative"))
    elif ref is not None:
        if "x" in ed and "y" in ed:
            x, y = _float(ed["x"], "ego.x", problems, 0.0), _float(ed["y"], "ego.y", problems, 0.0)
            s, d = ref.frenet_project((x, y))
            if abs(d) > 0.5:
                problems.append(("ego", f"initial position is {abs(d):.2f} m off the reference path"))
        else:
            s = _float(ed.get("s", 0.0), "ego.s", problems, 0.0)
            if not 0.0 <= s <= ref.length:
                problems.append(("ego.s", "must lie on the reference path"))
            x, y = ref.point_at(s)
        theta = float(ref.heading_at(s))
        ego = AgentState.on_path(float(x), float(y), theta, v0, ref)

    statics = []
    for i, od in enumerate(doc.get("static_obstacles") or []):
        loc = f"static_obstacles[{i}]"
        pts = _pts((od or {}).get("polygon"), f"{loc}.polygon", problems, 3)
        if pts is None:
            continue
        try:
            statics.append((str(od.get("id", f"static{i}")), make_polygon(pts)))
        except GeometryError as exc:
            problems.append((f"{loc}.polygon", str(exc)))

    dynamics = []
    for i, od in enumerate(doc.get("dynamic_obstacles") or []):
        loc = f"dynamic_obstacles[{i}]"
        od = od or {}
        cls = od.get("class", "vehicle")
        if cls not in CLASSES:
            problems.append((f"{loc}.class", f"must be one of {', '.join(CLASSES)}"))
            continue
        path = _pts(od.get("path"), f"{loc}.path", problems)
        prof = od.get("speed_profile", [[0.0, od.get("speed", 0.0)]])
        try:
            prof = np.asarray(prof, dtype=float).reshape(-1, 2)
        except (TypeError, ValueError):
            problems.append((f"{loc}.speed_profile", "expected [[t, v], ...]"))
            continue
        if np.any(np.diff(prof[:, 0]) <= 0) or np.any(prof[:, 1] < 0):
            problems.append((f"{loc}.speed_profile", "times must increase and speeds be >= 0"))
            continue
        if path is None:
            continue
        try:
            dynamics.append(DynamicObstacle(str(od.get("id", f"dyn{i}")), cls, path, prof,
                                            float(od.get("length", 4.5)), float(od.get("width", 1.8))))
        except ValueError as exc:
            problems.append((f"{loc}.path", str(exc)))

    planner = _params(PlannerConfig, doc.get("planner"), "planner", problems)
    tracker = _params(TrackerParams, doc.get("tracker"), "tracker", problems)
    if planner.dt != dt and "planner" in doc and "dt" in (doc.get("planner") or {}):
        problems.append(("planner.dt", "must equal the scenario dt"))
    planner.dt = dt if dt > 0 else planner.dt
    n_h = planner.horizon / planner.dt
    if abs(n_h - round(n_h)) > 1e-9:
        problems.append(("planner.horizon", "must be a multiple of dt"))

    def _phantom_conv(data):
        if "classes" in data:
            data["classes"] = tuple(data["classes"])
        if "profiles" in data:
            merged = PhantomParams().profiles
            merged.update({k: [tuple(p) for p in v] for k, v in data["profiles"].items()})
            data["profiles"] = merged
        return data

    phantoms = _params(PhantomParams, doc.get("phantoms"), "phantoms", problems, _phantom_conv)
    harm = _params(HarmParams, doc.get("harm"), "harm", problems,
                   lambda d: {k: tuple(v) for k, v in d.items()})

    if ego is not None and network is not None and statics:
        from shapely.geometry import Point
        for oid, poly in statics:
            if poly.covers(Point(ego.x, ego.y)):
                problems.append((f"static_obstacles[{oid}]", "ego starts inside an obstacle"))

    if problems:
        raise ScenarioError(problems)
    return Scenario(str(doc.get("name", "scenario")), network, ref, ego, statics, dynamics,
                    sensor_range, dt, duration, mode, r_max, obj_tr, planner, tracker,
                    phantoms, harm, int(doc.get("n_arc", 360)), raw=doc)


def load_scenario(path) -> Scenario:
    path = Path(path)
    text = path.read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        msg = getattr(exc, "problem", None) or str(exc)
        if mark is not None:
            raise ScenarioParseError(msg, mark.line + 1, mark.column + 1) from exc
        raise ScenarioParseError(msg) from exc
    return scenario_from_dict(doc)


def _round(obj, nd=6):
    if isinstance(obj, float):
        return obj if not math.isfinite(obj) else round(obj, nd)
    if isinstance(obj, (list, tuple)):
        return [_round(v, nd) for v in obj]
    if isinstance(obj, dict):
        return {k: _round(v, nd) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist(), nd)
    if isinstance(obj, np.floating):
        return _round(float(obj), nd)
    return obj


def dump_scenario(doc: dict, path) -> None:
    """Write a scenario document as YAML (block style, rounded coordinates)."""
    Path(path).write_text(yaml.safe_dump(_round(doc), sort_keys=False,
                                         default_flow_style=None, width=100))


def params_dict(obj) -> dict:
    return asdict(obj)
