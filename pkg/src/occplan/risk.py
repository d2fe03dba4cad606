"""Collision probability, harm and risk-gated trajectory selection."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .tracking import Prediction

log = logging.getLogger(__name__)

EGO_LENGTH = 4.8
EGO_WIDTH = 2.0
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class PlannerFailure(RuntimeError):
    """No usable trajectory candidate."""


@dataclass
class HarmParams:
    """Logistic harm curve per road-user class: ``(v50, k)``."""

    pedestrian: tuple[float, float] = (8.3, 0.6)
    cyclist: tuple[float, float] = (10.0, 0.5)
    vehicle: tuple[float, float] = (16.7, 0.3)

    def __post_init__(self):
        for cls in ("pedestrian", "cyclist", "vehicle"):
            v50, k = getattr(self, cls)
            if not (v50 > 0 and k > 0):
                raise ValueError(f"harm parameters for {cls} must be positive")

    def of(self, cls: str) -> tuple[float, float]:
        return getattr(self, cls)


def harm(cls: str, rel_speed, params: HarmParams | None = None):
    """Logistic severity in ``[0, 1]`` of a collision at ``rel_speed`` [m/s]."""
    v50, k = (params or HarmParams()).of(cls)
    rel = np.asarray(rel_speed, dtype=float)
    out = 1.0 / (1.0 + np.exp(-k * (rel - v50)))
    return float(out) if out.ndim == 0 else out


def collision_probability(center, theta, mean, cov, length: float = EGO_LENGTH,
                          width: float = EGO_WIDTH):
    """Probability mass of ``N(mean, cov)`` inside the oriented ego footprint.

    Vectorised over leading dimensions (``length`` and ``width`` too).  In the footprint frame the
    rectangle integral is reduced to a 1D integral over the longitudinal
    marginal (after a CDF change of variables, so tail cases stay accurate)
    of the closed-form lateral conditional probability.  A singular
    covariance is treated as a point mass.
    """
    center = np.asarray(center, dtype=float)
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    theta = np.asarray(theta, dtype=float)
    length = np.asarray(length, dtype=float)
    width = np.asarray(width, dtype=float)
    shape = np.broadcast_shapes(center.shape[:-1], mean.shape[:-1], cov.shape[:-2], theta.shape,
                                length.shape, width.shape)
    center = np.broadcast_to(center, shape + (2,)).reshape(-1, 2)
    mean = np.broadcast_to(mean, shape + (2,)).reshape(-1, 2)
    cov = np.broadcast_to(cov, shape + (2, 2)).reshape(-1, 2, 2)
    theta = np.broadcast_to(theta, shape).reshape(-1)
    hl = 0.5 * np.broadcast_to(length, shape).reshape(-1)
    hw = 0.5 * np.broadcast_to(width, shape).reshape(-1)

    c, s = np.cos(theta), np.sin(theta)
    dx, dy = mean[:, 0] - center[:, 0], mean[:, 1] - center[:, 1]
    mx = c * dx + s * dy
    my = -s * dx + c * dy
    sxx = c * c * cov[:, 0, 0] + 2 * c * s * cov[:, 0, 1] + s * s * cov[:, 1, 1]
    syy = s * s * cov[:, 0, 0] - 2 * c * s * cov[:, 0, 1] + c * c * cov[:, 1, 1]
    sxy = (c * c - s * s) * cov[:, 0, 1] + c * s * (cov[:, 1, 1] - cov[:, 0, 0])
    out = np.zeros(len(mx))
    det = sxx * syy - sxy ** 2
    singular = (det <= 1e-12) | (sxx <= 1e-12) | (syy <= 1e-12)
    inside = (np.abs(mx) <= hl) & (np.abs(my) <= hw)
    out[singular] = inside[singular].astype(float)

    sx = np.sqrt(np.where(singular, 1.0, sxx))
    sy = np.sqrt(np.where(singular, 1.0, syy))
    # far field: more than 12 sigma from the footprint contributes < 1e-32
    gap = np.hypot(np.maximum(np.abs(mx) - hl, 0.0), np.maximum(np.abs(my) - hw, 0.0))
    live = ~singular & (gap < 12.0 * np.maximum(sx, sy))
    if np.any(live):
        out[live] = _rect_mass(mx[live], my[live], sx[live], sy[live],
                               sxy[live] / (sx[live] * sy[live]), hl[live], hw[live])
    return np.clip(out, 0.0, 1.0).reshape(shape) if shape else float(np.clip(out[0], 0, 1))


def _rect_mass(mx, my, sx, sy, rho, hl, hw):
    # mirror so the footprint lies on the lower tail of the x-marginal
    flip = mx < 0.0
    mxf = np.where(flip, -mx, mx)
    rhof = np.where(flip, -rho, rho)
    u0 = ndtr((-hl - mxf) / sx)
    u1 = ndtr((hl - mxf) / sx)
    half = 0.5 * (u1 - u0)
    u = (u0 + u1)[:, None] * 0.5 + half[:, None] * _GL_NODES[None]
    z = ndtri(np.clip(u, 1e-300, 1.0 - 1e-16))
    cond_sd = sy[:, None] * np.sqrt(np.maximum(1.0 - rhof[:, None] ** 2, 1e-12))
    cond_mean = my[:, None] + rhof[:, None] * sy[:, None] * z
    hw = np.asarray(hw)[..., None] if np.ndim(hw) else hw
    g = ndtr((hw - cond_mean) / cond_sd) - ndtr((-hw - cond_mean) / cond_sd)
    return half * (g @ _GL_WEIGHTS)


@dataclass
class AgentForecast:
    """A prediction tagged with the class used for harm evaluation."""

    agent_id: str
    cls: str
    prediction: Prediction
    phantom: bool = False
    # agent footprint; zero treats the agent as a point
    length: float = 0.0
    width: float = 0.0
    heading: float = 0.0    # used where the forecast velocity vanishes

    def half_extents(self, ego_theta: np.ndarray, velocity: np.ndarray):
        """Agent half-sizes projected on the ego's longitudinal and lateral axes."""
        speed = np.hypot(velocity[:, 0], velocity[:, 1])
        phi = np.where(speed > 1e-3, np.arctan2(velocity[:, 1], velocity[:, 0]), self.heading)
        c, s = np.abs(np.cos(phi - ego_theta)), np.abs(np.sin(phi - ego_theta))
        hl, hw = 0.5 * self.length, 0.5 * self.width
        return hl * c + hw * s, hl * s + hw * c


@dataclass
class RiskProfile:
    t: np.ndarray
    risk: np.ndarray
    max_risk: float
    truncated: bool = False
    worst_agent: str | None = None

    @property
    def per_step(self) -> list[tuple[float, float]]:
        return list(zip(self.t.tolist(), self.risk.tolist()))


@dataclass
class TrajectoryCandidate:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    a: np.ndarray = field(default=None, repr=False)
    cost: float = 0.0
    feasible: bool = True
    target_speed: float = 0.0
    offset: float = 0.0
    s: np.ndarray = field(default=None, repr=False)
    d: np.ndarray = field(default=None, repr=False)
    label: str = ""

    @property
    def states(self) -> list[tuple[float, float, float, float]]:
        return list(zip(self.t.tolist(), self.x.tolist(), self.y.tolist(), self.v.tolist()))

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0


def trajectory_risk(traj: TrajectoryCandidate, forecasts: Sequence[AgentForecast],
                    harm_params: HarmParams | None = None,
                    length: float = EGO_LENGTH, width: float = EGO_WIDTH) -> RiskProfile:
    """Per-step maximum of probability x harm over all forecasts."""
    hp = harm_params or HarmParams()
    n = len(traj.t)
    risk = np.zeros(n)
    worst = np.full(n, -1)
    truncated = False
    dt = traj.dt or 1.0
    ego_vel = traj.v[:, None] * np.column_stack([np.cos(traj.theta), np.sin(traj.theta)])
    centers = np.column_stack([traj.x, traj.y])
    for j, fc in enumerate(forecasts):
        pred = fc.prediction
        idx = np.rint((traj.t - pred.t[0]) / dt).astype(int)
        ok = (idx >= 0) & (idx < len(pred.t))
        if not ok.all():
            truncated = True
        if not ok.any():
            continue
        k = idx[ok]
        # ego box grown by the agent's projected size bounds the Minkowski sum
        ex, ey = fc.half_extents(traj.theta[ok], pred.velocity[k])
        prob = collision_probability(centers[ok], traj.theta[ok], pred.mean[k], pred.cov[k],
                                     length + 2 * ex, width + 2 * ey)
        rel = np.hypot(*(ego_vel[ok] - pred.velocity[k]).T)
        r = prob * harm(fc.cls, rel, hp)
        sel = np.flatnonzero(ok)
        better = r > risk[sel]
        risk[sel[better]] = r[better]
        worst[sel[better]] = j
    risk = np.clip(risk, 0.0, 1.0)
    i = int(np.argmax(risk)) if n else 0
    agent = forecasts[worst[i]].agent_id if n and worst[i] >= 0 else None
    return RiskProfile(traj.t, risk, float(risk.max()) if n else 0.0, truncated, agent)


def select(candidates: Sequence[TrajectoryCandidate], risks: Sequence[float],
           r_max: float) -> tuple[int, bool]:
    """Index of the cheapest candidate with risk <= ``r_max``.

    ``candidates`` must be sorted by ascending cost.  When none qualifies the
    minimum-risk candidate is returned and the second value is ``True``.
    """
    if len(candidates) == 0:
        raise PlannerFailure("no trajectory candidates to select from")
    for i, r in enumerate(risks):
        if r <= r_max:
            return i, False
    i = int(np.argmin(risks))
    log.info("risk threshold %.3f exceeded: best available risk %.4f", r_max, risks[i])
    return i, True
