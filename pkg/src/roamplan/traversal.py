"""Vectorized grid traversal: visit every voxel a segment pierces, in order.

Many segments advance in lockstep, one voxel per iteration. Axis ties are
broken with x-before-y-before-z priority so results are reproducible across
implementations.
"""

from __future__ import annotations

import numpy as np


def _setup(starts: np.ndarray, ends: np.ndarray, origin: np.ndarray, resolution: float, dims: np.ndarray):
    p0 = (starts - origin) / resolution
    p1 = (ends - origin) / resolution
    d = p1 - p0
    cur = np.floor(p0).astype(np.int64)
    end = np.floor(p1).astype(np.int64)
    np.clip(cur, 0, dims - 1, out=cur)
    np.clip(end, 0, dims - 1, out=end)
    step = np.sign(d).astype(np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_delta = np.where(d != 0.0, np.abs(1.0 / d), np.inf)
        boundary = cur + (step > 0)
        t_max = np.where(d != 0.0, (boundary - p0) / d, np.inf)
    return cur, end, step, t_max, t_delta


def _ravel(idx: np.ndarray, dims: np.ndarray) -> np.ndarray:
    return (idx[:, 0] * dims[1] + idx[:, 1]) * dims[2] + idx[:, 2]


def visit_all(starts: np.ndarray, ends: np.ndarray, origin: np.ndarray,
              resolution: float, dims) -> tuple[np.ndarray, np.ndarray]:
    """Flattened voxel indices pierced by each segment, with segment ids.

    Returns (segment_ids, flat_voxel_ids); within one segment the voxels appear
    in traversal order. Endpoints are clipped into the grid.
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    ends = np.atleast_2d(np.asarray(ends, dtype=float))
    origin = np.asarray(origin, dtype=float)
    dims = np.asarray(dims, dtype=np.int64)
    n = starts.shape[0]
    cur, end, step, t_max, t_delta = _setup(starts, ends, origin, resolution, dims)

    seg_chunks = [np.arange(n, dtype=np.int64)]
    vox_chunks = [_ravel(cur, dims)]
    rows = np.nonzero(np.any(cur != end, axis=1))[0]
    max_iters = int(np.abs(end - cur).sum(axis=1).max(initial=0)) + 2
    for _ in range(max_iters):
        if rows.size == 0:
            break
        axis = np.argmin(t_max[rows], axis=1)
        cur[rows, axis] += step[rows, axis]
        t_max[rows, axis] += t_delta[rows, axis]
        seg_chunks.append(rows)
        vox_chunks.append(_ravel(cur[rows], dims))
        rows = rows[np.any(cur[rows] != end[rows], axis=1)]
    return np.concatenate(seg_chunks), np.concatenate(vox_chunks)


def segments_blocked(start: np.ndarray, ends: np.ndarray, blocking_flat: np.ndarray,
                     origin: np.ndarray, resolution: float, dims) -> np.ndarray:
    """Whether the straight segment from `start` to each end crosses a blocking voxel.

    The destination voxel itself is never tested; every voxel strictly before it
    (including the start voxel) is.
    """
    ends = np.atleast_2d(np.asarray(ends, dtype=float))
    origin = np.asarray(origin, dtype=float)
    dims = np.asarray(dims, dtype=np.int64)
    n = ends.shape[0]
    starts = np.broadcast_to(np.asarray(start, dtype=float), (n, 3)).copy()
    cur, end, step, t_max, t_delta = _setup(starts, ends, origin, resolution, dims)

    blocked = np.zeros(n, dtype=bool)
    at_end = np.all(cur == end, axis=1)
    active = ~at_end
    # The start voxel blocks only segments that have somewhere to go.
    start_block = blocking_flat[_ravel(cur, dims)] & active
    blocked |= start_block
    rows = np.nonzero(active & ~start_block)[0]
    max_iters = int(np.abs(end - cur).sum(axis=1).max(initial=0)) + 2
    for _ in range(max_iters):
        if rows.size == 0:
            break
        axis = np.argmin(t_max[rows], axis=1)
        cur[rows, axis] += step[rows, axis]
        t_max[rows, axis] += t_delta[rows, axis]
        done = np.all(cur[rows] == end[rows], axis=1)
        moving = rows[~done]
        if moving.size:
            hit = blocking_flat[_ravel(cur[moving], dims)]
            blocked[moving[hit]] = True
            rows = moving[~hit]
        else:
            rows = moving
    return blocked
