"""Occlusion-aware motion planning in a 2D closed-loop driving simulator."""
from .geometry import RegionSet, obstacle_shadow, sensor_disc, visible_region
from .occlusion import OcclusionMap, OcclusionTracker, detect
from .planner import PlannerConfig, braking_ladder, emergency_stop, sample
from .risk import HarmParams, collision_probability, harm, select, trajectory_risk
from .road import AgentState, Lanelet, LaneletNetwork, ReferencePath
from .scenario import Scenario, ScenarioError, load_scenario, scenario_from_dict
from .simulation import MetricsLog, RunResult, Simulation, run

__version__ = "0.1.0"

__all__ = [
    "AgentState", "HarmParams", "Lanelet", "LaneletNetwork", "MetricsLog", "OcclusionMap",
    "OcclusionTracker", "PlannerConfig", "ReferencePath", "RegionSet", "RunResult", "Scenario",
    "ScenarioError", "Simulation", "braking_ladder", "collision_probability", "detect",
    "emergency_stop", "harm",
    "load_scenario", "obstacle_shadow", "run", "sample", "scenario_from_dict", "select",
    "sensor_disc", "trajectory_risk", "visible_region",
]
