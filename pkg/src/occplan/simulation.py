"""Closed-loop simulation: sense, track, hypothesise, plan, select, advance."""
from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import shapely

from . import occlusion, phantoms, tracking
from .geometry import RegionSet, oriented_box
from .planner import braking_ladder, emergency_stop, sample
from .risk import EGO_LENGTH, EGO_WIDTH, AgentForecast, PlannerFailure, select, trajectory_risk
from .road import AgentState
from .scenario import MODES, Scenario

log = logging.getLogger(__name__)

PHANTOM_SIZE = {"pedestrian": (0.6, 0.6), "cyclist": (1.8, 0.7), "vehicle": (4.5, 1.8)}

COLUMNS = ("t", "s_ego", "v_ego", "a_ego", "max_risk", "area_A_o", "selected_cost",
           "exceedance_flag")


def _fmt(x: float) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return f"{x:.6f}"


@dataclass
class MetricsLog:
    """One row per simulation step in :data:`COLUMNS` order."""

    rows: list[tuple] = field(default_factory=list)

    def append(self, t, s, v, a, max_risk, area, cost, exceeded) -> None:
        self.rows.append((float(t), float(s), float(v), float(a), float(max_risk),
                          float(area), float(cost), bool(exceeded)))

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = COLUMNS.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(x) for x in r])
        return buf.getvalue()

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv_text())
        return path

    @classmethod
    def read_csv(cls, path) -> "MetricsLog":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != COLUMNS:
                raise ValueError(f"unexpected metrics columns {header}")
            log_ = cls()
            for r in reader:
                vals = [float(x) for x in r]
                log_.append(*vals[:7], bool(int(vals[7])))
        return log_


@dataclass
class StepInfo:
    """Per-step details kept in memory alongside the CSV row."""

    t: float
    visible_ids: list[str]
    n_phantoms: int
    emergency: bool
    collision: str | None
    n_candidates: int
    worst_agent: str | None = None


@dataclass
class RunResult:
    scenario: str
    mode: str
    r_max: float
    log: MetricsLog
    steps: list[StepInfo]
    collision: bool
    collision_t: float | None
    collision_with: str | None
    runtime: float

    def summary(self) -> dict:
        v = self.log.column("v_ego")
        a = self.log.column("a_ego")
        risk = self.log.column("max_risk")
        area = self.log.column("area_A_o")
        return {
            "scenario": self.scenario,
            "mode": self.mode,
            "r_max": self.r_max,
            "steps": len(self.log),
            "min_velocity": float(v.min()) if len(v) else 0.0,
            "max_abs_acceleration": float(np.abs(a).max()) if len(a) else 0.0,
            "max_risk": float(risk.max()) if len(risk) else 0.0,
            "sum_area_A_o": float(area.sum()),
            "exceedance_steps": int(self.log.column("exceedance_flag").sum()),
            "emergency_steps": sum(s.emergency for s in self.steps),
            "collision": self.collision,
            "collision_t": self.collision_t,
            "collision_with": self.collision_with,
        }


class Simulation:
    """Closed-loop world state for one scenario run.

    Mode behaviour:

    * ``baseline``: no occlusion reasoning; only currently visible obstacles.
    * ``phantom_only``: phantoms from memoryless occlusion (re-derived each step).
    * ``phantom_with_tracking``: phantoms from tracked occlusion plus memory of
      obstacles that left the visible area.
    * ``omniscient``: every obstacle is known; no phantoms.
    """

    def __init__(self, scenario: Scenario, mode: str | None = None, r_max: float | None = None):
        self.sc = scenario
        self.mode = mode or scenario.mode
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        self.r_max = scenario.r_max if r_max is None else r_max
        if scenario.object_tracking is None:
            self.object_memory = self.mode == "phantom_with_tracking"
        else:
            self.object_memory = scenario.object_tracking and self.mode != "omniscient"
        self.occ = occlusion.OcclusionTracker(scenario.network,
                                              tracking=self.mode == "phantom_with_tracking")
        self.t = 0.0
        self.k = 0
        self.ego = replace(scenario.ego_init)
        self.a_long = 0.0
        self.d_rate = 0.0
        self.d_acc = 0.0
        self.prev_v = self.ego.v
        self.objects: dict[str, tracking.TrackedObject] = {}
        self.log = MetricsLog()
        self.steps: list[StepInfo] = []
        self.collision_t: float | None = None
        self.collision_with: str | None = None
        self.last_a_v: RegionSet | None = None
        self.last_phantoms: list = []

    # sensing ------------------------------------------------------------
    def obstacles_at(self, t: float):
        out = [(oid, "static", poly, None, None) for oid, poly in self.sc.static_obstacles]
        for dyn in self.sc.dynamic_obstacles:
            st = dyn.state_at(t)
            out.append((dyn.id, dyn.cls, oriented_box(st.x, st.y, st.theta, dyn.length, dyn.width),
                        st, dyn))
        return out

    def ego_footprint(self):
        return oriented_box(self.ego.x, self.ego.y, self.ego.theta, EGO_LENGTH, EGO_WIDTH)

    # one closed-loop step -----------------------------------------------
    def step(self) -> None:
        sc, t, dt = self.sc, self.t, self.sc.dt
        obstacles = self.obstacles_at(t)
        polys = [o[2] for o in obstacles]

        foot = self.ego_footprint()
        hit = None
        for oid, _, poly, _, _ in obstacles:
            if shapely.intersects(foot, poly) and shapely.intersection(foot, poly).area > 1e-6:
                hit = oid
                break
        if hit is not None and self.collision_t is None:
            self.collision_t, self.collision_with = t, hit
            log.warning("%s: collision with %s at t=%.1f s", sc.name, hit, t)

        # an obstacle overlapping the sensor origin casts no shadow and counts as seen
        inside = [i for i, p in enumerate(polys) if p.covers(shapely.Point(self.ego.x, self.ego.y))]
        sensed = [i for i in range(len(polys)) if i not in inside]
        a_v, vis = occlusion.detect(self.ego, [polys[i] for i in sensed], sc.network,
                                    sc.sensor_range, sc.n_arc)
        vis_idx = sorted([sensed[i] for i in vis] + inside)
        self.last_a_v = a_v
        if self.mode == "omniscient":
            vis_idx = list(range(len(obstacles)))
        visible_ids = [obstacles[i][0] for i in vis_idx]

        if self.mode in ("phantom_only", "phantom_with_tracking"):
            a_o = self.occ.step(a_v, t, dt)
            area = a_o.area
        else:
            a_o, area = RegionSet(), 0.0

        observations = [tracking.Observation(o[0], o[4].cls, o[3], o[4].length, o[4].width)
                        for o in (obstacles[i] for i in vis_idx) if o[3] is not None]
        if self.object_memory:
            self.objects = tracking.refresh_or_prune(self.objects, observations, t, sc.tracker)
        else:
            self.objects = tracking.refresh_or_prune({}, observations, t, sc.tracker)

        forecasts = []
        for obj in self.objects.values():
            pred = tracking.predict(obj, sc.network, sc.planner.horizon, dt, now=t, params=sc.tracker)
            forecasts.append(AgentForecast(obj.id, obj.cls, pred, length=obj.length,
                                           width=obj.width, heading=obj.last_seen_state.theta))

        agents = []
        if self.mode in ("phantom_only", "phantom_with_tracking"):
            vis_polys = [polys[i] for i in vis_idx]
            statics = [(oid, poly) for oid, kind, poly, _, _ in obstacles if kind == "static"]
            sp_static = phantoms.static_spawn_points(a_o, statics, sc.reference_path, self.ego,
                                                     sc.sensor_range, vis_polys, sc.phantoms)
            sp_dyn = phantoms.dynamic_spawn_points(self.occ.map, sc.network, sc.reference_path,
                                                   vis_polys, sc.phantoms)
            agents = phantoms.make_phantoms(sp_static, sp_dyn, sc.network, sc.reference_path,
                                            sc.phantoms)
            for ag in agents:
                for pp in phantoms.predict_phantom(ag, dt, sc.planner.horizon, t, sc.phantoms.cov):
                    ln, wd = PHANTOM_SIZE[ag.cls]
                    forecasts.append(AgentForecast(ag.id, ag.cls, pp.prediction, phantom=True,
                                                   length=ln, width=wd, heading=_path_heading(ag.path)))
        self.last_phantoms = agents

        emergency = False
        try:
            cands = sample(self.ego, sc.reference_path, sc.planner, self.a_long,
                           self.d_rate, self.d_acc, t0=t)
            profiles = [trajectory_risk(c, forecasts, sc.harm) for c in cands]
            idx, exceeded = select(cands, [p.max_risk for p in profiles], self.r_max)
            chosen, profile = cands[idx], profiles[idx]
            if exceeded:
                # no acceptable plan: gentlest braking that is acceptable, else the safest one
                brakes = braking_ladder(self.ego, sc.reference_path, sc.planner, t0=t)
                b_prof = [trajectory_risk(b, forecasts, sc.harm) for b in brakes]
                j, still = select(brakes, [p.max_risk for p in b_prof], self.r_max)
                if b_prof[j].max_risk < profile.max_risk:
                    chosen, profile, exceeded, emergency = brakes[j], b_prof[j], still, True
        except PlannerFailure:
            emergency = True
            chosen = emergency_stop(self.ego, sc.reference_path, sc.planner, t0=t)
            profile = trajectory_risk(chosen, forecasts, sc.harm)
            exceeded = True
            cands = []

        a_fd = 0.0 if self.k == 0 else (self.ego.v - self.prev_v) / dt
        self.log.append(t, self.ego.s, self.ego.v, a_fd, profile.max_risk, area, chosen.cost,
                        exceeded)
        self.steps.append(StepInfo(t, visible_ids, len(agents), emergency, hit, len(cands),
                                   profile.worst_agent))
        self._advance(chosen, dt, emergency)

    def _advance(self, chosen, dt: float, emergency: bool = False) -> None:
        self.prev_v = self.ego.v
        x, y, v = float(chosen.x[1]), float(chosen.y[1]), float(chosen.v[1])
        theta = float(chosen.theta[1]) if v > 1e-6 or self.ego.v > 1e-6 else self.ego.theta
        self.ego = AgentState.on_path(x, y, theta, v, self.sc.reference_path)
        # after full braking the next plan starts from released brakes
        self.a_long = 0.0 if emergency else float(chosen.a[1])
        d = chosen.d
        self.d_rate = float((d[2] - d[0]) / (2 * dt)) if len(d) > 2 else 0.0
        self.d_acc = float((d[2] - 2 * d[1] + d[0]) / dt ** 2) if len(d) > 2 else 0.0
        self.k += 1
        self.t = self.k * dt

    def run(self) -> RunResult:
        t0 = time.perf_counter()
        for _ in range(self.sc.n_steps):
            self.step()
        return RunResult(self.sc.name, self.mode, self.r_max, self.log, self.steps,
                         self.collision_t is not None, self.collision_t, self.collision_with,
                         time.perf_counter() - t0)


def _path_heading(path: np.ndarray) -> float:
    seg = np.asarray(path)[1] - np.asarray(path)[0] if len(path) > 1 else np.zeros(2)
    return float(math.atan2(seg[1], seg[0]))


def run(scenario: Scenario, mode: str | None = None, r_max: float | None = None) -> RunResult:
    return Simulation(scenario, mode, r_max).run()


def reduction_percent(tracked_sum: float, naive_sum: float) -> float | None:
    """Relative occluded-area reduction of ``tracked_sum`` against ``naive_sum``."""
    if naive_sum <= 0.0:
        return None
    return 100.0 * (naive_sum - tracked_sum) / naive_sum
