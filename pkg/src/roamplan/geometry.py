"""Shared geometric primitives: poses, angles, boxes, ray intersections."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(angle):
    """Normalize an angle (scalar or array) into [-pi, pi)."""
    return (np.asarray(angle) + math.pi) % TWO_PI - math.pi


def angle_difference(a, b):
    """Signed smallest rotation from b to a, in [-pi, pi)."""
    return wrap_angle(a - b)


def azimuth_of(delta: np.ndarray) -> float:
    """Horizontal heading of a displacement vector (0 along +x)."""
    return math.atan2(float(delta[1]), float(delta[0]))


@dataclass
class Pose:
    """Position plus yaw; yaw kept in [-pi, pi)."""

    position: np.ndarray
    yaw: float = 0.0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).reshape(3)
        self.yaw = float(wrap_angle(self.yaw))

    def copy(self) -> "Pose":
        return Pose(self.position.copy(), self.yaw)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in meters."""

    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def from_min_max(cls, lo, hi) -> "Box":
        lo = np.asarray(lo, dtype=float).reshape(3)
        hi = np.asarray(hi, dtype=float).reshape(3)
        if np.any(hi <= lo):
            raise ValueError(f"degenerate box: lo={lo}, hi={hi}")
        return cls(lo, hi)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def extents(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, point: np.ndarray, margin: float = 0.0) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.lo + margin) and np.all(p <= self.hi - margin))

    def intersect(self, other: "Box") -> "Box | None":
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(hi <= lo):
            return None
        return Box(lo, hi)


def boxes_overlap(lo_a, hi_a, lo_b, hi_b) -> bool:
    """Strict interval overlap on every axis (touching faces do not count)."""
    return bool(np.all(lo_a < hi_b) and np.all(lo_b < hi_a))


def cylinder_box_overlap(center, radius, half_height, lo, hi) -> bool:
    """Vertical cylinder vs axis-aligned box, strict overlap."""
    if not (center[2] - half_height < hi[2] and lo[2] < center[2] + half_height):
        return False
    cx = min(max(center[0], lo[0]), hi[0])
    cy = min(max(center[1], lo[1]), hi[1])
    return (center[0] - cx) ** 2 + (center[1] - cy) ** 2 < radius**2


def ray_box_interval(origin, dirs, lo, hi):
    """Entry/exit parameters of rays against one box.

    dirs is (N, 3); returns (t_enter, t_exit) arrays of shape (N,). Rays with no
    intersection get t_enter > t_exit.
    """
    origin = np.asarray(origin, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lo - origin) / dirs
        t2 = (hi - origin) / dirs
    near = np.minimum(t1, t2)
    far = np.maximum(t1, t2)
    # Zero-direction axes intersect iff the origin lies inside the slab.
    zero = dirs == 0.0
    if np.any(zero):
        inside = (origin >= lo) & (origin <= hi)
        near = np.where(zero, np.where(inside, -np.inf, np.inf), near)
        far = np.where(zero, np.where(inside, np.inf, -np.inf), far)
    return near.max(axis=1), far.min(axis=1)


def first_hit_boxes(origin, dirs, boxes_lo, boxes_hi) -> np.ndarray:
    """Smallest nonnegative entry distance per ray over a set of boxes (inf if none)."""
    n = dirs.shape[0]
    best = np.full(n, np.inf)
    for lo, hi in zip(boxes_lo, boxes_hi):
        t_enter, t_exit = ray_box_interval(origin, dirs, lo, hi)
        t_hit = np.where(t_enter >= 0.0, t_enter, 0.0)
        hit = (t_exit >= t_enter) & (t_exit >= 0.0)
        best = np.where(hit, np.minimum(best, t_hit), best)
    return best


def box_exit_distance(origin, dirs, lo, hi) -> np.ndarray:
    """Exit distance per ray for an origin inside the box."""
    _, t_exit = ray_box_interval(origin, dirs, lo, hi)
    return np.maximum(t_exit, 0.0)


def ray_cylinder_entry(origin, dirs, center, radius, half_height) -> np.ndarray:
    """First nonnegative hit distance per ray against a capped vertical cylinder.

    Combines the radial (xy) and axial (z) intersection intervals; caps fall out
    of the interval intersection. Returns inf where there is no hit.
    """
    origin = np.asarray(origin, dtype=float)
    n = dirs.shape[0]
    oxy = origin[:2] - np.asarray(center[:2], dtype=float)
    dxy = dirs[:, :2]

    a = np.einsum("ij,ij->i", dxy, dxy)
    b = 2.0 * (dxy @ oxy)
    c = float(oxy @ oxy) - radius * radius

    r_in = np.full(n, np.inf)
    r_out = np.full(n, -np.inf)
    radial = a > 1e-12
    disc = b * b - 4.0 * a * c
    ok = radial & (disc >= 0.0)
    if np.any(ok):
        sq = np.sqrt(disc[ok])
        r_in[ok] = (-b[ok] - sq) / (2.0 * a[ok])
        r_out[ok] = (-b[ok] + sq) / (2.0 * a[ok])
    vertical = ~radial
    if np.any(vertical):
        inside = c <= 0.0
        r_in[vertical] = -np.inf if inside else np.inf
        r_out[vertical] = np.inf if inside else -np.inf

    z0 = center[2] - half_height
    z1 = center[2] + half_height
    dz = dirs[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        tz1 = (z0 - origin[2]) / dz
        tz2 = (z1 - origin[2]) / dz
    z_in = np.minimum(tz1, tz2)
    z_out = np.maximum(tz1, tz2)
    flat = dz == 0.0
    if np.any(flat):
        inside_z = (origin[2] >= z0) & (origin[2] <= z1)
        z_in = np.where(flat, np.where(inside_z, -np.inf, np.inf), z_in)
        z_out = np.where(flat, np.where(inside_z, np.inf, -np.inf), z_out)

    enter = np.maximum(r_in, z_in)
    exit_ = np.minimum(r_out, z_out)
    hit = (enter <= exit_) & (exit_ >= 0.0)
    return np.where(hit, np.maximum(enter, 0.0), np.inf)


def segment_point_distances(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distance from each point to segment [a, b]."""
    pts = np.atleast_2d(points)
    ab = b - a
    denom = float(ab @ ab)
    if denom <= 1e-18:
        return np.linalg.norm(pts - a, axis=1)
    t = np.clip((pts - a) @ ab / denom, 0.0, 1.0)
    closest = a + t[:, None] * ab
    return np.linalg.norm(pts - closest, axis=1)


def polyline_point_distances(points: np.ndarray, polyline: np.ndarray) -> np.ndarray:
    """Distance from each point to a waypoint polyline (single point allowed)."""
    poly = np.atleast_2d(polyline)
    if poly.shape[0] == 1:
        return np.linalg.norm(np.atleast_2d(points) - poly[0], axis=1)
    best = None
    for i in range(poly.shape[0] - 1):
        d = segment_point_distances(points, poly[i], poly[i + 1])
        best = d if best is None else np.minimum(best, d)
    return best


def segments_intersect_aabbs(a: np.ndarray, b: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Whether segment [a, b] touches each box of a (N, 3) lo/hi set."""
    d = b - a
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lo - a) / d
        t2 = (hi - a) / d
    near = np.minimum(t1, t2)
    far = np.maximum(t1, t2)
    zero = d == 0.0
    if np.any(zero):
        inside = (a >= lo) & (a <= hi)
        near = np.where(zero, np.where(inside, -np.inf, np.inf), near)
        far = np.where(zero, np.where(inside, np.inf, -np.inf), far)
    t_enter = near.max(axis=-1)
    t_exit = far.min(axis=-1)
    return (t_exit >= t_enter) & (t_exit >= 0.0) & (t_enter <= 1.0)


def polyline_length(positions: np.ndarray) -> float:
    pts = np.atleast_2d(positions)
    if pts.shape[0] < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())
