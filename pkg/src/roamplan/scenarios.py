"""Reference scenarios and the scenario file format.

Files are YAML with SI units (degrees for fields of view). All shipped
geometry is grid-aligned and at least one voxel thick so the ground-truth
reachability flood fill cannot leak through sub-voxel gaps.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from .config import Config
from .geometry import Box, Pose
from .world import DynamicObstacle, Scenario


def scenario_to_dict(scn: Scenario) -> dict:
    return {
        "name": scn.name,
        "seed": int(scn.seed),
        "bounds": {"min": scn.bounds.lo.tolist(), "max": scn.bounds.hi.tolist()},
        "robot_start": {"position": scn.robot_start.position.tolist(),
                        "yaw": float(scn.robot_start.yaw)},
        "static_solids": [{"min": s.lo.tolist(), "max": s.hi.tolist()}
                          for s in scn.static_solids],
        "dynamic_obstacles": [
            {
                "radius": o.radius,
                "height": o.height,
                "speed": o.speed,
                "loop": o.loop,
                "waypoints": [{"position": p.tolist(), "hold": h} for p, h in o.waypoints],
            }
            for o in scn.dynamic_obstacles
        ],
        "config": scn.config.to_dict(),
    }


def scenario_from_dict(data: dict) -> Scenario:
    bounds = Box.from_min_max(data["bounds"]["min"], data["bounds"]["max"])
    start = data.get("robot_start", {})
    pose = Pose(np.asarray(start.get("position", bounds.center), dtype=float),
                float(start.get("yaw", 0.0)))
    solids = [Box.from_min_max(s["min"], s["max"]) for s in data.get("static_solids", [])]
    obstacles = [
        DynamicObstacle(
            radius=float(o["radius"]),
            height=float(o["height"]),
            speed=float(o.get("speed", 0.0)),
            loop=bool(o.get("loop", True)),
            waypoints=[(np.asarray(w["position"], dtype=float), float(w.get("hold", 0.0)))
                       for w in o["waypoints"]],
        )
        for o in data.get("dynamic_obstacles", [])
    ]
    config = Config.from_dict(data.get("config", {}))
    scn = Scenario(
        name=str(data.get("name", "scenario")),
        bounds=bounds,
        static_solids=solids,
        dynamic_obstacles=obstacles,
        robot_start=pose,
        seed=int(data.get("seed", 0)),
        config=config,
    )
    scn.validate()
    return scn


def save_scenario(scn: Scenario, path) -> None:
    with Path(path).open("w", encoding="utf-8") as f:
        yaml.safe_dump(scenario_to_dict(scn), f, sort_keys=False)


def load_scenario(source) -> Scenario:
    """Load a scenario from a YAML path or a builtin name."""
    path = Path(source)
    if path.exists():
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
        return scenario_from_dict(data)
    builders = builtin_scenarios()
    if str(source) in builders:
        return builders[str(source)]()
    raise FileNotFoundError(f"no scenario file or builtin named {source!r}")


# -- reference worlds -----------------------------------------------------------

def _wall(x0, y0, x1, y1, z1=2.4, z0=0.0) -> Box:
    return Box.from_min_max([x0, y0, z0], [x1, y1, z1])


def _walker(radius, height, speed, points, hold=0.4, loop=True) -> DynamicObstacle:
    z = height / 2.0
    return DynamicObstacle(radius=radius, height=height, speed=speed, loop=loop,
                           waypoints=[(np.array([x, y, z]), hold) for x, y in points])


def build_room_small() -> Scenario:
    """~6x4x2.4 m room with a table block and a half-height partition."""
    bounds = Box.from_min_max([0, 0, 0], [6.0, 4.0, 2.4])
    solids = [
        _wall(2.4, 1.6, 3.2, 2.4, z1=1.0),            # table block
        _wall(4.4, 0.0, 4.6, 2.2),                     # partition with a gap at the top wall
        _wall(1.2, 3.0, 1.6, 3.4, z1=1.6),             # shelf
    ]
    return Scenario(
        name="room_small", bounds=bounds, static_solids=solids, dynamic_obstacles=[],
        robot_start=Pose(np.array([0.8, 0.8, 1.0]), 0.0), seed=1, config=Config.build())


def build_maze_medium() -> Scenario:
    """~10x10x2.4 m maze of full-height walls forming S-shaped corridors."""
    bounds = Box.from_min_max([0, 0, 0], [10.0, 10.0, 2.4])
    solids = [
        _wall(2.4, 0.0, 2.6, 7.0),
        _wall(4.8, 3.0, 5.0, 10.0),
        _wall(7.2, 0.0, 7.4, 7.0),
        _wall(0.0, 4.8, 1.4, 5.0),
        _wall(5.0, 4.8, 6.2, 5.0),
        _wall(8.4, 4.8, 10.0, 5.0),
        _wall(3.4, 8.0, 4.8, 8.2),
    ]
    return Scenario(
        name="maze_medium", bounds=bounds, static_solids=solids, dynamic_obstacles=[],
        robot_start=Pose(np.array([1.0, 1.0, 1.2]), 0.0), seed=1, config=Config.build())


def build_corridor_rooms() -> Scenario:
    """~12x8x2.4 m central corridor with four rooms opening off it."""
    bounds = Box.from_min_max([0, 0, 0], [12.0, 8.0, 2.4])
    solids = [
        # south wall of the corridor, doors at x 2.0-3.2 and 8.0-9.2
        _wall(0.0, 3.2, 2.0, 3.4), _wall(3.2, 3.2, 8.0, 3.4), _wall(9.2, 3.2, 12.0, 3.4),
        # north wall of the corridor, doors at x 4.4-5.6 and 10.0-11.2
        _wall(0.0, 4.6, 4.4, 4.8), _wall(5.6, 4.6, 10.0, 4.8), _wall(11.2, 4.6, 12.0, 4.8),
        # room dividers
        _wall(5.8, 0.0, 6.0, 3.2),
        _wall(6.0, 4.8, 6.2, 8.0),
        # some furniture
        _wall(1.6, 1.2, 2.4, 1.8, z1=0.8),
        _wall(9.0, 6.2, 9.8, 7.0, z1=1.2),
    ]
    return Scenario(
        name="corridor_rooms", bounds=bounds, static_solids=solids, dynamic_obstacles=[],
        robot_start=Pose(np.array([0.8, 4.0, 1.2]), 0.0), seed=1, config=Config.build())


def build_dynamic_room() -> Scenario:
    """8x5x2.4 m room, one table block, two walkers patrolling the far walls."""
    bounds = Box.from_min_max([0, 0, 0], [8.0, 5.0, 2.4])
    solids = [_wall(3.4, 1.6, 4.2, 2.2, z1=1.0)]
    walkers = [
        _walker(0.26, 1.7, 0.4, [(1.4, 4.4), (6.6, 4.4)], hold=0.6),
        _walker(0.26, 1.7, 0.35, [(7.2, 1.0), (7.2, 3.8)], hold=0.8),
    ]
    return Scenario(
        name="dynamic_room", bounds=bounds, static_solids=solids, dynamic_obstacles=walkers,
        robot_start=Pose(np.array([0.8, 0.8, 1.0]), 0.0), seed=1, config=Config.build())


def build_dynamic_hall() -> Scenario:
    """8x6x2.4 m hall with a central pillar and three walkers."""
    bounds = Box.from_min_max([0, 0, 0], [8.0, 6.0, 2.4])
    solids = [_wall(3.8, 2.8, 4.2, 3.2)]
    walkers = [
        _walker(0.28, 1.7, 0.4, [(1.2, 5.2), (7.0, 5.2)], hold=0.8),
        _walker(0.28, 1.7, 0.35, [(7.0, 1.0), (7.0, 4.8)], hold=0.8),
        _walker(0.25, 1.6, 0.3, [(3.0, 2.2), (5.0, 2.2), (5.0, 3.8), (3.0, 3.8)], hold=0.5),
    ]
    return Scenario(
        name="dynamic_hall", bounds=bounds, static_solids=solids, dynamic_obstacles=walkers,
        robot_start=Pose(np.array([0.8, 0.8, 1.0]), 0.8), seed=1, config=Config.build())


def build_dynamic_field() -> Scenario:
    """Open 9x7x2.4 m area with four walkers: a perimeter loop and three lanes."""
    bounds = Box.from_min_max([0, 0, 0], [9.0, 7.0, 2.4])
    walkers = [
        _walker(0.28, 1.7, 0.45, [(1.4, 1.4), (7.6, 1.4), (7.6, 5.6), (1.4, 5.6)]),
        _walker(0.28, 1.7, 0.3, [(2.6, 3.5), (6.4, 3.5)], hold=1.0),
        _walker(0.25, 1.6, 0.35, [(5.5, 4.5), (7.0, 5.5)], hold=0.8),
        _walker(0.3, 1.8, 0.3, [(2.0, 2.6), (2.0, 5.0)], hold=1.0),
    ]
    return Scenario(
        name="dynamic_field", bounds=bounds, static_solids=[], dynamic_obstacles=walkers,
        robot_start=Pose(np.array([4.5, 2.4, 1.0]), 1.6), seed=1, config=Config.build())


def builtin_scenarios() -> dict:
    return {
        "room_small": build_room_small,
        "maze_medium": build_maze_medium,
        "corridor_rooms": build_corridor_rooms,
        "dynamic_room": build_dynamic_room,
        "dynamic_hall": build_dynamic_hall,
        "dynamic_field": build_dynamic_field,
    }


def export_builtin_files(directory) -> list[Path]:
    """Write every builtin scenario as a YAML file; returns the paths."""
    out = []
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, builder in builtin_scenarios().items():
        path = directory / f"{name}.yaml"
        save_scenario(builder(), path)
        out.append(path)
    return out
