"""roamplan: incremental-roadmap exploration planning in voxel worlds."""

from .config import (
    Config,
    GainConfig,
    OptimizerConfig,
    PlannerConfig,
    RobotModel,
    SamplerConfig,
    SensorModel,
    UpdateRuleConfig,
)
from .esdf import EsdfGrid, average_trajectory_distance, rebuild
from .gain import evaluate_node, gain_at_yaw, update_after_execution
from .geometry import Box, Pose
from .mapping import OccupancyMap, UnknownClass, VoxelState
from .optimizer import OptimizationRecord, feasible, objective, optimize
from .planner import (
    Conflict,
    Trajectory,
    Waypoint,
    check_termination,
    execution_time,
    goal_candidates,
    plan,
    predict_collision,
    replan,
)
from .roadmap import Roadmap, RoadmapNode, connect_new_nodes, sample_incremental, shortest_path
from .runner import RunMetrics, run_exploration, run_suite
from .scenarios import builtin_scenarios, load_scenario, save_scenario
from .world import (
    DynamicObstacle,
    Scan,
    Scenario,
    TrajectoryFollower,
    check_ground_truth_collision,
    simulate_scan,
    step_robot,
)

__version__ = "0.1.0"
