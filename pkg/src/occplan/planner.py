"""Frenet-frame trajectory sampler producing cost-sorted feasible candidates.

Longitudinal motion is a velocity-keeping quartic that reaches the target
speed with zero acceleration at the horizon; lateral motion is a quintic
that settles on the target offset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .risk import PlannerFailure, TrajectoryCandidate
from .road import AgentState, ReferencePath


@dataclass
class PlannerConfig:
    horizon: float = 3.0
    dt: float = 0.1
    desired_speed: float = 13.9
    target_speeds: list[float] | None = None   # default: 5 speeds over [0, desired]
    lateral_offsets: list[float] = field(default_factory=lambda: [-0.5, 0.0, 0.5])
    w_jerk: float = 0.05
    w_lateral: float = 1.0
    w_speed: float = 1.0
    a_max: float = 3.0
    a_min: float = -8.0
    a_lat_max: float = 4.0
    # lateral rate may exceed the longitudinal speed by at most this much [m/s]
    lateral_creep: float = 0.1
    # fallback braking levels as fractions of a_min, gentlest first
    brake_fractions: tuple = (0.25, 0.5, 0.75, 1.0)

    def __post_init__(self):
        n = self.horizon / self.dt
        if abs(n - round(n)) > 1e-9:
            raise ValueError("horizon must be a multiple of dt")
        if not (self.a_max > 0 and self.a_min < 0 and self.a_lat_max > 0):
            raise ValueError("acceleration limits must be positive (a_min negative)")

    @property
    def speeds(self) -> list[float]:
        if self.target_speeds is not None:
            return list(self.target_speeds)
        return list(np.linspace(0.0, self.desired_speed, 5))


def _quartic_velocity_keeping(s0, v0, a0, v1, T, t):
    # s(t) = s0 + v0 t + a0/2 t^2 + c3 t^3 + c4 t^4 with s'(T) = v1, s''(T) = 0
    A = np.array([[3 * T ** 2, 4 * T ** 3], [6 * T, 12 * T ** 2]])
    b = np.array([v1 - v0 - a0 * T, -a0])
    c3, c4 = np.linalg.solve(A, b)
    s = s0 + v0 * t + 0.5 * a0 * t ** 2 + c3 * t ** 3 + c4 * t ** 4
    v = v0 + a0 * t + 3 * c3 * t ** 2 + 4 * c4 * t ** 3
    a = a0 + 6 * c3 * t + 12 * c4 * t ** 2
    j = 6 * c3 + 24 * c4 * t
    return s, v, a, j


def _quintic(d0, dd0, ddd0, d1, T, t):
    # d(T) = d1, d'(T) = 0, d''(T) = 0
    A = np.array([[T ** 3, T ** 4, T ** 5],
                  [3 * T ** 2, 4 * T ** 3, 5 * T ** 4],
                  [6 * T, 12 * T ** 2, 20 * T ** 3]])
    b = np.array([d1 - d0 - dd0 * T - 0.5 * ddd0 * T ** 2,
                  -dd0 - ddd0 * T,
                  -ddd0])
    c3, c4, c5 = np.linalg.solve(A, b)
    d = d0 + dd0 * t + 0.5 * ddd0 * t ** 2 + c3 * t ** 3 + c4 * t ** 4 + c5 * t ** 5
    dd = dd0 + ddd0 * t + 3 * c3 * t ** 2 + 4 * c4 * t ** 3 + 5 * c5 * t ** 4
    ddd = ddd0 + 6 * c3 * t + 12 * c4 * t ** 2 + 20 * c5 * t ** 3
    jerk = 6 * c3 + 24 * c4 * t + 60 * c5 * t ** 2
    return d, dd, ddd, jerk


def sample(ego: AgentState, ref: ReferencePath, cfg: PlannerConfig,
           a0: float = 0.0, d_rate: float = 0.0, d_acc: float = 0.0,
           t0: float = 0.0, keep_infeasible: bool = False) -> list[TrajectoryCandidate]:
    """Candidates for every (target speed, lateral offset) pair, sorted by cost.

    ``a0``, ``d_rate`` and ``d_acc`` carry the longitudinal acceleration and
    lateral derivatives of the previous plan so consecutive plans join
    smoothly.  Infeasible candidates are dropped unless ``keep_infeasible``.
    """
    T, dt = cfg.horizon, cfg.dt
    n = int(round(T / dt))
    t = np.arange(n + 1) * dt
    s0, d0 = ego.s, ego.d
    out = []
    for i, vt in enumerate(cfg.speeds):
        s, ds, dds, jl = _quartic_velocity_keeping(s0, ego.v, a0, vt, T, t)
        for k, off in enumerate(cfg.lateral_offsets):
            d, dd, ddd, jd = _quintic(d0, d_rate, d_acc, off, T, t)
            xy = ref.to_cartesian(s, d)
            kappa = ref.curvature_at(s)
            v = np.hypot(ds, dd)
            a_lat = ds ** 2 * kappa + ddd
            dv = np.diff(v) / dt
            feasible = bool(np.all(dds <= cfg.a_max + 1e-9) and np.all(dds >= cfg.a_min - 1e-9)
                            and np.all(dv <= cfg.a_max + 1e-9) and np.all(dv >= cfg.a_min - 1e-9)
                            and np.all(np.abs(a_lat) <= cfg.a_lat_max + 1e-9)
                            and np.all(ds >= -1e-6)
                            and np.all(np.abs(dd) <= np.maximum(ds, 0.0) + cfg.lateral_creep))
            v = np.maximum(v, 0.0)
            theta = _headings(xy, ref, s)
            cost = dt * (cfg.w_jerk * float(np.sum(jl ** 2 + jd ** 2))
                         + cfg.w_lateral * float(np.sum(d ** 2))
                         + cfg.w_speed * float(np.sum((ds - cfg.desired_speed) ** 2)))
            cand = TrajectoryCandidate(t0 + t, xy[:, 0], xy[:, 1], v, theta, dds, cost, feasible,
                                       float(vt), float(off), s, d, label=f"v{i}o{k}")
            if feasible or keep_infeasible:
                out.append(((cost, i, abs(off), off), cand))
    if not out:
        raise PlannerFailure("no kinematically feasible candidate")
    out.sort(key=lambda item: item[0])
    return [cand for _, cand in out]


def _headings(xy: np.ndarray, ref: ReferencePath, s: np.ndarray) -> np.ndarray:
    step = np.diff(xy, axis=0)
    moving = np.hypot(step[:, 0], step[:, 1]) > 1e-6
    th = np.empty(len(xy))
    base = ref.heading_at(s)
    th[:-1] = np.where(moving, np.arctan2(step[:, 1], step[:, 0]), base[:-1])
    th[-1] = th[-2] if len(xy) > 1 else base[-1]
    return th


def emergency_stop(ego: AgentState, ref: ReferencePath, cfg: PlannerConfig,
                   t0: float = 0.0, decel: float | None = None) -> TrajectoryCandidate:
    """Constant braking (``a_min`` by default) to standstill, holding the lateral offset."""
    acc = cfg.a_min if decel is None else -abs(decel)
    n = int(round(cfg.horizon / cfg.dt))
    t = np.arange(n + 1) * cfg.dt
    stop_t = ego.v / -acc
    tc = np.minimum(t, stop_t)
    s = ego.s + ego.v * tc + 0.5 * acc * tc ** 2
    v = np.maximum(ego.v + acc * t, 0.0)
    a = np.where(t < stop_t, acc, 0.0)
    d = np.full_like(t, ego.d)
    xy = ref.to_cartesian(s, d)
    theta = _headings(xy, ref, s)
    if ego.v <= 1e-9:
        theta[:] = ego.theta
    return TrajectoryCandidate(t0 + t, xy[:, 0], xy[:, 1], v, theta, a, math.inf, True,
                               0.0, float(ego.d), s, d, label=f"brake{-acc:.1f}")


def braking_ladder(ego: AgentState, ref: ReferencePath, cfg: PlannerConfig,
                   t0: float = 0.0) -> list[TrajectoryCandidate]:
    """Constant-deceleration stops at each of ``cfg.brake_fractions`` of ``a_min``."""
    return [emergency_stop(ego, ref, cfg, t0, f * cfg.a_min) for f in cfg.brake_fractions]
