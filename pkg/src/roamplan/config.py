"""Parameter bundles for the simulator, mapping, roadmap, and planner stack."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, is_dataclass, replace

import numpy as np


@dataclass
class SensorModel:
    """Depth-camera geometry. planner_range is the reduced range used for planning."""

    max_range: float = 4.0
    planner_range: float = 3.2
    fov_deg: tuple[float, float] = (103.2, 77.4)
    ray_grid: tuple[int, int] = (64, 48)

    def __post_init__(self):
        if not self.planner_range < self.max_range:
            raise ValueError("planner_range must be strictly less than max_range")
        if min(self.fov_deg) <= 0 or max(self.fov_deg) >= 180:
            raise ValueError(f"fov out of range: {self.fov_deg}")
        if min(self.ray_grid) < 1:
            raise ValueError("ray_grid counts must be >= 1")

    @property
    def fov_rad(self) -> tuple[float, float]:
        return (float(np.deg2rad(self.fov_deg[0])), float(np.deg2rad(self.fov_deg[1])))


@dataclass
class RobotModel:
    v_max: float = 0.3
    omega_max: float = 0.8
    collision_box: tuple[float, float, float] = (0.4, 0.4, 0.3)

    @property
    def half_extents(self) -> np.ndarray:
        return 0.5 * np.asarray(self.collision_box, dtype=float)


@dataclass
class SamplerConfig:
    min_node_distance: float = 0.8
    max_edge_distance: float = 1.5
    max_sample_failures: int = 50
    local_box_extents: tuple[float, float, float] = (6.4, 6.4, 6.4)

    def __post_init__(self):
        if not self.min_node_distance < self.max_edge_distance:
            raise ValueError("min_node_distance must be below max_edge_distance")
        if self.max_sample_failures < 1:
            raise ValueError("max_sample_failures must be >= 1")


@dataclass
class GainConfig:
    """Weights and discretization for visible-unknown counting."""

    w_normal: float = 1.0
    w_frontier: float = 2.0
    w_surface: float = 4.0
    n_sectors: int = 32
    fov_deg: tuple[float, float] = (103.2, 77.4)
    planner_range: float = 3.2

    def __post_init__(self):
        if not (self.w_surface >= self.w_frontier >= self.w_normal > 0):
            raise ValueError("gain weights must satisfy w_surface >= w_frontier >= w_normal > 0")
        if self.n_sectors < 4:
            raise ValueError("need at least 4 yaw sectors")

    @property
    def sector_width(self) -> float:
        return 2.0 * np.pi / self.n_sectors


@dataclass
class UpdateRuleConfig:
    """Selective gain-update rule around the previously executed trajectory."""

    trajectory_radius: float = 3.2
    zero_gain_threshold: float = 5.0
    zero_distance_threshold: float = 0.8

    def __post_init__(self):
        if min(self.trajectory_radius, self.zero_gain_threshold, self.zero_distance_threshold) <= 0:
            raise ValueError("update-rule thresholds must be positive")


@dataclass
class PlannerConfig:
    cutoff_regular: float = 0.5
    cutoff_replan: float = 0.8
    termination_steps: int = 3
    v_max: float = 0.3
    omega_max: float = 0.8
    candidate_cap: int | None = 15
    prediction_horizon: float = 5.0
    prediction_margin: float = 0.25
    score_time_floor: float = 0.1

    def __post_init__(self):
        if not (0.0 < self.cutoff_regular < self.cutoff_replan < 1.0):
            raise ValueError("cutoffs must satisfy 0 < regular < replan < 1")


@dataclass
class OptimizerConfig:
    time_weight: float = 1.0
    distance_weight: float = 1.0
    local_box: tuple[float, float, float] = (0.5, 0.5, 0.5)
    max_passes: int = 10
    samples_per_node: int = 20
    min_node_distance: float = 0.8
    planner_range: float = 3.2
    collision_box: tuple[float, float, float] = (0.4, 0.4, 0.3)
    v_max: float = 0.3
    omega_max: float = 0.8

    def __post_init__(self):
        if self.time_weight <= 0 or self.distance_weight <= 0:
            raise ValueError("objective weights must be positive")
        if min(self.local_box) < 0:
            raise ValueError("local box extents must be nonnegative")


@dataclass
class Config:
    """Full parameter bundle carried by a scenario."""

    resolution: float = 0.2
    sim_dt: float = 0.1
    sensor: SensorModel = field(default_factory=SensorModel)
    robot: RobotModel = field(default_factory=RobotModel)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    gain: GainConfig = field(default_factory=GainConfig)
    update: UpdateRuleConfig = field(default_factory=UpdateRuleConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    @classmethod
    def build(cls, **sections) -> "Config":
        """Build a config, propagating shared values into dependent sections.

        Explicit keys in a dependent section always win over the propagated
        defaults (e.g. gain.planner_range follows sensor.planner_range unless
        given).
        """
        def _section(name: str) -> dict:
            raw = sections.get(name, {})
            return {k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()}

        top = {k: sections[k] for k in ("resolution", "sim_dt") if k in sections}
        sensor = SensorModel(**_section("sensor"))
        robot = RobotModel(**_section("robot"))
        sampler_kw = _section("sampler")
        sampler_kw.setdefault("local_box_extents", (2 * sensor.planner_range,) * 3)
        sampler = SamplerConfig(**sampler_kw)

        gain_kw = _section("gain")
        gain_kw.setdefault("fov_deg", sensor.fov_deg)
        gain_kw.setdefault("planner_range", sensor.planner_range)
        gain = GainConfig(**gain_kw)

        update_kw = _section("update")
        update_kw.setdefault("trajectory_radius", sensor.planner_range)
        update_kw.setdefault("zero_distance_threshold", sampler.min_node_distance)
        update = UpdateRuleConfig(**update_kw)

        planner_kw = _section("planner")
        planner_kw.setdefault("v_max", robot.v_max)
        planner_kw.setdefault("omega_max", robot.omega_max)
        planner = PlannerConfig(**planner_kw)

        optimizer_kw = _section("optimizer")
        optimizer_kw.setdefault("min_node_distance", sampler.min_node_distance)
        optimizer_kw.setdefault("planner_range", sensor.planner_range)
        optimizer_kw.setdefault("collision_box", robot.collision_box)
        optimizer_kw.setdefault("v_max", robot.v_max)
        optimizer_kw.setdefault("omega_max", robot.omega_max)
        optimizer = OptimizerConfig(**optimizer_kw)

        return cls(sensor=sensor, robot=robot, sampler=sampler, gain=gain,
                   update=update, planner=planner, optimizer=optimizer, **top)

    def to_dict(self) -> dict:
        return _dataclass_to_dict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        return cls.build(**{k: dict(v) if isinstance(v, dict) else v for k, v in data.items()})

    def with_planner(self, **kw) -> "Config":
        return replace(self, planner=replace(self.planner, **kw))


def _dataclass_to_dict(obj):
    if is_dataclass(obj):
        out = {}
        for f in fields(obj):
            out[f.name] = _dataclass_to_dict(getattr(obj, f.name))
        return out
    if isinstance(obj, tuple):
        return list(obj)
    return obj
