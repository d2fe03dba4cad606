"""Tracking and prediction of obstacles that leave the visible area.

Vehicles and cyclists are predicted with a kinematic lane follower (constant
speed along the lane centerline, lateral offset decaying to zero);
pedestrians with constant velocity.  Position uncertainty is an isotropic
Gaussian whose variance grows linearly with the time since the last
observation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .road import AgentState, LaneletNetwork, ReferencePath

CLASSES = ("vehicle", "cyclist", "pedestrian")


@dataclass
class TrackerParams:
    sigma0: float = 0.25      # base positional variance [m^2]
    q: float = 0.5            # variance growth [m^2/s]
    t_forget: float = 5.0     # prune after this long unseen [s]
    t_pred: float = 3.0       # prediction horizon [s]
    d_decay: float = 2.0      # lateral offset time constant [s]


@dataclass
class Prediction:
    """Time-indexed Gaussian position forecast for one agent."""

    t: np.ndarray          # (n,) absolute times [s]
    mean: np.ndarray       # (n, 2)
    cov: np.ndarray        # (n, 2, 2)
    velocity: np.ndarray   # (n, 2)


@dataclass
class TrackedObject:
    id: str
    cls: str
    last_seen_state: AgentState
    last_seen_t: float
    length: float = 4.5
    width: float = 1.8
    prediction: Prediction | None = field(default=None, repr=False)

    def time_unseen(self, now: float) -> float:
        return max(0.0, now - self.last_seen_t)


def grow_uncertainty(time_unseen: float, t_rel=0.0, params: TrackerParams | None = None) -> np.ndarray:
    """Covariances ``(sigma0 + q * (time_unseen + t_rel)) * I`` for each ``t_rel``."""
    if time_unseen < 0.0:
        raise ValueError("time_unseen must be non-negative")
    p = params or TrackerParams()
    t_rel = np.atleast_1d(np.asarray(t_rel, dtype=float))
    var = p.sigma0 + p.q * (time_unseen + t_rel)
    return var[:, None, None] * np.eye(2)[None]


def _constant_velocity(state: AgentState, tau: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vel = state.v * np.array([math.cos(state.theta), math.sin(state.theta)])
    mean = np.array([state.x, state.y]) + tau[:, None] * vel
    return mean, np.repeat(vel[None], len(tau), axis=0)


def _lane_following(state: AgentState, net: LaneletNetwork, tau: np.ndarray,
                    d_decay: float):
    hit = net.locate(state.x, state.y, state.theta)
    if hit is None:
        return None
    lane, s0, d0 = hit
    travel = state.v * tau
    path = ReferencePath(net.follow(lane.id, s0, float(travel[-1]) + 1.0))
    d = d0 * np.exp(-tau / d_decay)
    mean = path.to_cartesian(travel, d)
    heading = path.heading_at(travel)
    vel = state.v * np.column_stack([np.cos(heading), np.sin(heading)])
    return mean, vel


def predict(obj: TrackedObject, net: LaneletNetwork | None, horizon: float, dt: float,
            now: float | None = None, params: TrackerParams | None = None) -> Prediction:
    """Forecast ``obj`` over ``[now, now + horizon]`` at step ``dt``.

    Motion is extrapolated from the last observed state, so an object that
    has been hidden for a while is predicted from where it should be now.
    """
    p = params or TrackerParams()
    now = obj.last_seen_t if now is None else now
    unseen = obj.time_unseen(now)
    n = int(round(horizon / dt))
    t_rel = np.arange(n + 1) * dt
    tau = unseen + t_rel
    result = None
    if obj.cls != "pedestrian" and net is not None:
        result = _lane_following(obj.last_seen_state, net, tau, p.d_decay)
    if result is None:
        result = _constant_velocity(obj.last_seen_state, tau)
    mean, vel = result
    cov = grow_uncertainty(unseen, t_rel, p)
    return Prediction(now + t_rel, mean, cov, vel)


@dataclass
class Observation:
    id: str
    cls: str
    state: AgentState
    length: float = 4.5
    width: float = 1.8


def refresh_or_prune(objs: dict[str, TrackedObject], visible: list[Observation],
                     now: float, params: TrackerParams | None = None) -> dict[str, TrackedObject]:
    """Refresh seen objects and drop those unseen for longer than ``t_forget``."""
    p = params or TrackerParams()
    out: dict[str, TrackedObject] = {}
    seen = {o.id: o for o in visible}
    for oid, obj in objs.items():
        if oid not in seen and obj.time_unseen(now) <= p.t_forget:
            out[oid] = obj
    for oid, o in seen.items():
        out[oid] = TrackedObject(oid, o.cls, o.state, now, o.length, o.width)
    return dict(sorted(out.items()))
