"""Incrementally grown roadmap: nodes, validated edges, exact spatial queries.

Nodes are never removed or moved; ids are insertion order. At desk scale exact
nearest/radius queries are a vectorized scan over the position table, which
satisfies the exactness contract without an index structure.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import SamplerConfig, SensorModel
from .geometry import Box, Pose
from .mapping import OccupancyMap


@dataclass
class RoadmapNode:
    id: int
    position: np.ndarray
    sector_gains: np.ndarray
    total_gain: float = 0.0
    needs_update: bool = True
    adjacency: dict[int, float] = field(default_factory=dict)


class Roadmap:
    def __init__(self, n_sectors: int = 32):
        self.n_sectors = int(n_sectors)
        self.nodes: dict[int, RoadmapNode] = {}
        self._pos = np.empty((64, 3), dtype=float)
        self._count = 0

    def __len__(self) -> int:
        return self._count

    @property
    def positions(self) -> np.ndarray:
        return self._pos[:self._count]

    def add_node(self, position: np.ndarray) -> RoadmapNode:
        if self._count == self._pos.shape[0]:
            grown = np.empty((2 * self._pos.shape[0], 3), dtype=float)
            grown[:self._count] = self._pos[:self._count]
            self._pos = grown
        nid = self._count
        pos = np.asarray(position, dtype=float).reshape(3)
        self._pos[nid] = pos
        self._count += 1
        node = RoadmapNode(nid, pos.copy(), np.zeros(self.n_sectors))
        self.nodes[nid] = node
        return node

    # -- spatial queries ------------------------------------------------------

    def nearest_distance(self, point: np.ndarray) -> float:
        if self._count == 0:
            return float("inf")
        return float(np.linalg.norm(self.positions - point, axis=1).min())

    def nearest_node(self, point: np.ndarray) -> int:
        """Closest node id; ties resolve to the smallest id."""
        if self._count == 0:
            raise ValueError("empty roadmap")
        d = np.linalg.norm(self.positions - point, axis=1)
        return int(np.argmin(d))

    def within_radius(self, point: np.ndarray, radius: float) -> np.ndarray:
        if self._count == 0:
            return np.empty(0, dtype=np.int64)
        d = np.linalg.norm(self.positions - point, axis=1)
        return np.nonzero(d <= radius)[0]

    # -- edges ------------------------------------------------------------------

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.nodes[u].adjacency

    def add_edge(self, u: int, v: int) -> float:
        length = float(np.linalg.norm(self.nodes[u].position - self.nodes[v].position))
        self.nodes[u].adjacency[v] = length
        self.nodes[v].adjacency[u] = length
        return length

    def edge_count(self) -> int:
        return sum(len(n.adjacency) for n in self.nodes.values()) // 2

    def edges(self):
        for u, node in self.nodes.items():
            for v in node.adjacency:
                if u < v:
                    yield u, v

    def write_snapshot(self, path) -> None:
        with Path(path).open("w", encoding="utf-8") as f:
            f.write("roadmap v1\n")
            for nid in sorted(self.nodes):
                n = self.nodes[nid]
                p = n.position
                f.write(f"node {nid} {p[0]:.6f} {p[1]:.6f} {p[2]:.6f} {n.total_gain:.6f}\n")
            for u, v in sorted(self.edges()):
                f.write(f"edge {u} {v}\n")


def sample_incremental(roadmap: Roadmap, occ_map: OccupancyMap, robot_pose: Pose,
                       cfg: SamplerConfig, collision_box, rng: np.random.Generator) -> list[int]:
    """Two-stage saturation sampling: local box around the robot, then global.

    Each stage draws jittered positions from clear free voxels; a draw closer
    than min_node_distance to its nearest neighbor counts as a failure, any
    insertion resets the count, and the stage ends once failures exceed
    max_sample_failures.
    """
    clear = occ_map.clear_free_mask(collision_box)
    if not clear.any():
        return []

    ext = 0.5 * np.asarray(cfg.local_box_extents, dtype=float)
    local = Box(robot_pose.position - ext, robot_pose.position + ext).intersect(occ_map.bounds)
    new_ids: list[int] = []
    centers = occ_map.index_to_center(np.argwhere(clear))

    for region in (local, occ_map.bounds):
        if region is None:
            continue
        inside = np.all((centers >= region.lo) & (centers <= region.hi), axis=1)
        pool = centers[inside]
        if pool.shape[0] == 0:
            continue
        failures = 0
        while failures <= cfg.max_sample_failures:
            center = pool[rng.integers(pool.shape[0])]
            pos = center + rng.uniform(-0.5, 0.5, 3) * occ_map.resolution
            if roadmap.nearest_distance(pos) < cfg.min_node_distance:
                failures += 1
            else:
                new_ids.append(roadmap.add_node(pos).id)
                failures = 0
    return new_ids


def connect_new_nodes(roadmap: Roadmap, occ_map: OccupancyMap, new_ids, sensor: SensorModel,
                      cfg: SamplerConfig, collision_box) -> int:
    """Wire each new node to neighbors meeting the traversability, distance, and
    sensor-range constraints. Adjacency stays symmetric; duplicates are skipped."""
    added = 0
    for nid in new_ids:
        if nid not in roadmap.nodes:
            raise ValueError(f"unknown node id {nid}")
        node = roadmap.nodes[nid]
        for other in roadmap.within_radius(node.position, cfg.max_edge_distance):
            other = int(other)
            if other == nid or roadmap.has_edge(nid, other):
                continue
            length = float(np.linalg.norm(node.position - roadmap.nodes[other].position))
            if length > cfg.max_edge_distance or length > sensor.planner_range:
                continue
            if not occ_map.is_segment_traversable(node.position, roadmap.nodes[other].position,
                                                  collision_box):
                continue
            roadmap.add_edge(nid, other)
            added += 1
    return added


def shortest_path(roadmap: Roadmap, from_id: int, to_id: int,
                  blocked_edges: set[frozenset] | None = None) -> list[int] | None:
    """Minimum-length path; equal-length ties pick the lexicographically
    smallest id sequence. Returns None when disconnected."""
    for nid in (from_id, to_id):
        if nid not in roadmap.nodes:
            raise ValueError(f"unknown node id {nid}")
    return dijkstra(roadmap, [(0.0, (from_id,))], to_id, blocked_edges)


def dijkstra(roadmap: Roadmap, sources: list[tuple[float, tuple[int, ...]]], to_id: int,
             blocked_edges: set[frozenset] | None = None) -> list[int] | None:
    """Dijkstra over (length, path) keys so tie-breaking is lexicographic."""
    blocked = blocked_edges or set()
    heap: list[tuple[float, tuple[int, ...]]] = []
    for cost, path in sources:
        heapq.heappush(heap, (cost, path))
    best: dict[int, tuple[float, tuple[int, ...]]] = {}
    while heap:
        cost, path = heapq.heappop(heap)
        node = path[-1]
        if node in best and best[node] <= (cost, path):
            continue
        best[node] = (cost, path)
        if node == to_id:
            return list(path)
        for nb, length in sorted(roadmap.nodes[node].adjacency.items()):
            if frozenset((node, nb)) in blocked or nb in path:
                continue
            cand = (cost + length, path + (nb,))
            if nb in best and best[nb] <= cand:
                continue
            heapq.heappush(heap, cand)
    return None


def validate_invariants(roadmap: Roadmap, occ_map: OccupancyMap, sensor: SensorModel,
                        cfg: SamplerConfig, collision_box,
                        new_edges: list[tuple[int, int]] | None = None) -> list[str]:
    """Pairwise-spacing and edge-condition checks; returns human-readable violations."""
    issues: list[str] = []
    pos = roadmap.positions
    if pos.shape[0] >= 2:
        diff = pos[:, None, :] - pos[None, :, :]
        d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        np.fill_diagonal(d, np.inf)
        bad = np.argwhere(d < cfg.min_node_distance - 1e-9)
        for u, v in bad:
            if u < v:
                issues.append(f"nodes {u},{v} spaced {d[u, v]:.3f} < {cfg.min_node_distance}")
    edges = new_edges if new_edges is not None else list(roadmap.edges())
    for u, v in edges:
        length = roadmap.nodes[u].adjacency.get(v)
        if length is None:
            issues.append(f"edge {u},{v} missing adjacency")
            continue
        if length > cfg.max_edge_distance + 1e-9:
            issues.append(f"edge {u},{v} length {length:.3f} > {cfg.max_edge_distance}")
        if length > sensor.planner_range + 1e-9:
            issues.append(f"edge {u},{v} length {length:.3f} > planner range")
        if not occ_map.is_segment_traversable(roadmap.nodes[u].position,
                                              roadmap.nodes[v].position, collision_box):
            issues.append(f"edge {u},{v} not traversable at insertion")
    return issues
