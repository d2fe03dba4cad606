import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from occplan.risk import (EGO_LENGTH, EGO_WIDTH, AgentForecast, HarmParams, PlannerFailure,
                          TrajectoryCandidate, collision_probability, harm, select,
                          trajectory_risk)
from occplan.tracking import Prediction


def mc_probability(center, theta, mean, cov, n=200_000, seed=0, length=EGO_LENGTH,
                   width=EGO_WIDTH):
    """Monte-Carlo oracle: fraction of samples inside the oriented rectangle."""
    rng = np.random.default_rng(seed)
    pts = rng.multivariate_normal(mean, cov, size=n)
    c, s = math.cos(theta), math.sin(theta)
    dx, dy = pts[:, 0] - center[0], pts[:, 1] - center[1]
    u, v = c * dx + s * dy, -s * dx + c * dy
    return float(np.mean((np.abs(u) <= length / 2) & (np.abs(v) <= width / 2)))


# --- harm ----------------------------------------------------------------------------

@pytest.mark.parametrize("cls", ["pedestrian", "cyclist", "vehicle"])
def test_harm_midpoint(cls):
    v50, _ = HarmParams().of(cls)
    assert harm(cls, v50) == 0.5


def test_harm_pedestrian_at_rest():
    assert harm("pedestrian", 0.0) == pytest.approx(1 / (1 + math.exp(0.6 * 8.3)), rel=1e-12)
    assert harm("pedestrian", 0.0) == pytest.approx(0.0068, abs=5e-5)


@given(st.floats(0, 40), st.floats(0.01, 10))
def test_harm_strictly_increasing(v, dv):
    h = harm("cyclist", np.array([v, v + dv]))
    assert h[0] < h[1] or h[1] == 1.0
    assert 0.0 <= h[0] <= 1.0


def test_harm_params_validated():
    with pytest.raises(ValueError):
        HarmParams(vehicle=(0.0, 0.3))


# --- collision probability -----------------------------------------------------------

def test_concentrated_overlap_is_one():
    assert collision_probability((0, 0), 0.0, (0, 0), 0.01 * np.eye(2)) == pytest.approx(1.0)


def test_far_field_is_negligible():
    assert collision_probability((0, 0), 0.0, (100, 0), np.eye(2)) < 1e-30


def test_singular_covariance_is_point_mass():
    zero = np.zeros((2, 2))
    assert collision_probability((0, 0), 0.3, (1.0, 0.2), zero) == 1.0
    assert collision_probability((0, 0), 0.0, (3.0, 0.0), zero) == 0.0


def test_mid_range_case_matches_monte_carlo():
    mean = (EGO_LENGTH / 2 + 2.0, 0.0)
    got = collision_probability((0, 0), 0.0, mean, 0.5 * np.eye(2))
    ref = mc_probability((0, 0), 0.0, mean, 0.5 * np.eye(2), n=1_000_000)
    assert got == pytest.approx(ref, rel=0.05)
    assert 0.5 * ref <= got <= 2.0 * ref


@given(st.floats(-4, 4), st.floats(-4, 4), st.floats(-math.pi, math.pi),
       st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(-0.8, 0.8))
def test_exact_integral_matches_monte_carlo(mx, my, theta, sa, sb, rho):
    cov = np.array([[sa, rho * math.sqrt(sa * sb)], [rho * math.sqrt(sa * sb), sb]])
    got = collision_probability((0, 0), theta, (mx, my), cov)
    ref = mc_probability((0, 0), theta, (mx, my), cov, n=40_000, seed=1)
    # binomial standard error of the oracle
    se = math.sqrt(max(ref * (1 - ref), 1e-4) / 40_000)
    assert abs(got - ref) <= 5 * se + 1e-3


def test_vectorised_call_matches_scalar_calls():
    rng = np.random.default_rng(3)
    means = rng.normal(0, 3, size=(7, 2))
    covs = np.array([np.eye(2) * s for s in rng.uniform(0.1, 2, 7)])
    lengths = rng.uniform(3, 6, 7)
    batch = collision_probability(np.zeros(2), 0.2, means, covs, lengths, 2.0)
    for i in range(7):
        assert batch[i] == pytest.approx(
            collision_probability((0, 0), 0.2, means[i], covs[i], lengths[i], 2.0), rel=1e-12)


def test_footprint_translation_and_rotation_invariance():
    cov = np.array([[1.0, 0.3], [0.3, 0.5]])
    p0 = collision_probability((0, 0), 0.0, (2.0, 1.0), cov)
    c, s = math.cos(0.7), math.sin(0.7)
    R = np.array([[c, -s], [s, c]])
    p1 = collision_probability((5, -3), 0.7, np.array([5, -3]) + R @ [2.0, 1.0], R @ cov @ R.T)
    assert p1 == pytest.approx(p0, rel=1e-9)


# --- trajectory risk ---------------------------------------------------------------------

def _straight_traj(v=10.0, n=31, dt=0.1):
    t = np.arange(n) * dt
    return TrajectoryCandidate(t, v * t, np.zeros(n), np.full(n, v), np.zeros(n))


def _forecast(x0, y0, vx, vy, n=31, dt=0.1, cls="pedestrian", cov=0.3, **kw):
    t = np.arange(n) * dt
    mean = np.column_stack([x0 + vx * t, y0 + vy * t])
    pred = Prediction(t, mean, np.repeat((cov * np.eye(2))[None], n, 0),
                      np.tile([vx, vy], (n, 1)))
    return AgentForecast(f"{cls}-{x0}-{y0}", cls, pred, **kw)


def test_no_agents_zero_risk():
    prof = trajectory_risk(_straight_traj(), [])
    assert prof.max_risk == 0.0 and np.all(prof.risk == 0.0)


def test_far_phantom_negligible_risk():
    prof = trajectory_risk(_straight_traj(), [_forecast(0, 40.0, 1.0, 0.0, phantom=True)])
    assert prof.max_risk < 1e-6


def test_duplicate_agent_is_idempotent():
    f = _forecast(20.0, 2.0, 0.0, -1.0)
    one = trajectory_risk(_straight_traj(), [f])
    two = trajectory_risk(_straight_traj(), [f, f])
    assert one.max_risk > 0.0
    assert np.array_equal(one.risk, two.risk)


def test_risk_is_probability_times_harm():
    traj = _straight_traj()
    f = _forecast(15.0, 0.0, 0.0, 0.0)
    prof = trajectory_risk(traj, [f])
    k = 15
    p = collision_probability((traj.x[k], 0.0), 0.0, (15.0, 0.0), 0.3 * np.eye(2))
    assert prof.risk[k] == pytest.approx(p * harm("pedestrian", 10.0))
    assert prof.max_risk == pytest.approx(prof.risk.max())


def test_agent_size_enlarges_overlap():
    traj = _straight_traj()
    point = trajectory_risk(traj, [_forecast(15.0, 3.0, 0.0, 0.0, cls="vehicle")])
    sized = trajectory_risk(traj, [_forecast(15.0, 3.0, 0.0, 0.0, cls="vehicle",
                                             length=4.5, width=1.8, heading=math.pi / 2)])
    assert sized.max_risk > point.max_risk


def test_horizon_mismatch_flags_truncation():
    prof = trajectory_risk(_straight_traj(), [_forecast(15.0, 0.0, 0.0, 0.0, n=10)])
    assert prof.truncated
    assert np.all(prof.risk[10:] == 0.0)


agents = st.lists(st.tuples(st.floats(0, 40), st.floats(-5, 5), st.floats(-3, 3), st.floats(-3, 3)),
                  min_size=1, max_size=4)


@given(agents)
def test_removing_an_agent_never_increases_risk(specs):
    fcs = [_forecast(*s) for s in specs]
    full = trajectory_risk(_straight_traj(), fcs)
    fewer = trajectory_risk(_straight_traj(), fcs[1:])
    assert np.all(fewer.risk <= full.risk + 1e-15)
    assert np.all((full.risk >= 0) & (full.risk <= 1))


# --- selection ------------------------------------------------------------------------------

def _cands(n):
    return [_straight_traj() for _ in range(n)]


def test_select_examples():
    assert select(_cands(3), [0.3, 0.12, 0.04], 0.1) == (2, False)
    assert select(_cands(2), [0.3, 0.25], 0.1) == (1, True)
    assert select(_cands(3), [0.9, 0.5, 0.1], math.inf) == (0, False)


def test_select_empty_raises():
    with pytest.raises(PlannerFailure):
        select([], [], 0.1)


risk_lists = st.lists(st.floats(0, 1), min_size=1, max_size=8)


@given(risk_lists, st.floats(0.01, 1), st.floats(0.1, 10))
def test_select_scale_invariant(risks, r_max, c):
    cands = _cands(len(risks))
    i, flag = select(cands, risks, r_max)
    j, flag2 = select(cands, [c * r for r in risks], c * r_max)
    # floating rounding can move a value across the scaled threshold
    assume(all(abs(r - r_max) > 1e-9 for r in risks))
    assert (i, flag) == (j, flag2)


@given(risk_lists, st.floats(0, 1), st.floats(0, 1))
def test_lower_threshold_never_picks_riskier(risks, r1, r2):
    lo, hi = sorted((r1, r2))
    cands = _cands(len(risks))
    assert risks[select(cands, risks, lo)[0]] <= risks[select(cands, risks, hi)[0]]
