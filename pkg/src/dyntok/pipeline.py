"""End-to-end compression pipeline shared by the CLI and the bindings.

The pipeline always computes per frame and concatenates results in frame
order, so output bytes do not depend on how many worker threads ran.
``DYNTOK_THREADS`` caps parallelism for callers that do not pass an
explicit thread count: unset or 1 means serial, 0 means one thread per
CPU, any other positive integer is used as given.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analysis import CompressionStats, compute_stats, stats_from_groups
from .fusion import CompressedSequence, fuse
from .grids import FrameGridPair
from .grouping import GroupMap, as_threshold, build_groups
from .pooling import POOL2, pool
from .similarity import SimilarityGrid, adjacent_cosine

THREADS_ENV = "DYNTOK_THREADS"


def resolve_threads(threads=None):
    """Worker count from the argument, else the environment, else 1."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "1").strip()
        try:
            threads = int(raw)
        except ValueError:
            raise ValueError(
                f"{THREADS_ENV} must be a non-negative integer, got {raw!r}"
            ) from None
    threads = int(threads)
    if threads < 0:
        raise ValueError(f"thread count must be >= 0, got {threads}")
    if threads == 0:
        return os.cpu_count() or 1
    return threads


@dataclass(frozen=True)
class CompressionResult:
    """Everything one compression run produced, in raster order."""

    grid: FrameGridPair
    similarities: SimilarityGrid
    group_map: GroupMap
    sequence: CompressedSequence
    stats: CompressionStats


def _frame_slice(grid, i):
    return FrameGridPair(grid.vision[i : i + 1], grid.embedding[i : i + 1])


def _compress_frame(grid, i, threshold):
    frame = _frame_slice(grid, i)
    sims = adjacent_cosine(frame)
    gmap = build_groups(sims, threshold)
    seq = fuse(frame, gmap)
    return sims, gmap, seq


def _merge_frames(grid, threshold, parts):
    t, h, w = grid.grid_shape
    sims = SimilarityGrid(np.concatenate([p[0].values for p in parts], axis=0))
    mask = np.concatenate([p[1].start_mask for p in parts], axis=0)
    gmap = GroupMap(threshold=threshold, start_mask=mask)
    fused = np.concatenate([p[2].fused for p in parts], axis=0)
    provenance = np.concatenate([p[2].provenance for p in parts], axis=0)
    provenance[:, 0] = np.repeat(
        np.arange(t, dtype=np.int32), [p[2].fused_count for p in parts]
    )
    seq = CompressedSequence(fused, provenance, (t, h, w))
    return sims, gmap, seq


def compress_grid(grid, threshold, pool_spec=None, threads=None):
    """Optionally pool, then group and fuse ``grid`` at ``threshold``.

    ``pool_spec`` may be a PoolSpec or True for the default 2x2 stride-2
    pooling. Frames are processed independently (in parallel when
    ``threads`` resolves above 1) and merged in raster order, so results
    are bitwise identical for every thread count.
    """
    threshold = as_threshold(threshold)
    workers = resolve_threads(threads)
    if pool_spec is not None and pool_spec is not False:
        grid = pool(grid, POOL2 if pool_spec is True else pool_spec)
    t = grid.frames
    if workers > 1 and t > 1:
        with ThreadPoolExecutor(max_workers=min(workers, t)) as pool_exec:
            parts = list(
                pool_exec.map(lambda i: _compress_frame(grid, i, threshold), range(t))
            )
    else:
        parts = [_compress_frame(grid, i, threshold) for i in range(t)]
    sims, gmap, seq = _merge_frames(grid, threshold, parts)
    stats = compute_stats(seq, grid.grid_shape, threshold=threshold)
    return CompressionResult(grid, sims, gmap, seq, stats)


def sweep_grid(grid, thresholds, pool_spec=None, threads=None):
    """Group maps and stats per ascending threshold, sharing one
    similarity grid.

    Returns (pooled grid, similarities, [GroupMap], [CompressionStats]).
    Fused payloads are not materialized; sweeps only need counts.
    """
    values = [as_threshold(th) for th in thresholds]
    if not values:
        raise ValueError("threshold sweep needs at least one threshold")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"thresholds must be strictly ascending, got {values}")
    workers = resolve_threads(threads)
    if pool_spec is not None and pool_spec is not False:
        grid = pool(grid, POOL2 if pool_spec is True else pool_spec)
    t = grid.frames
    if workers > 1 and t > 1:
        with ThreadPoolExecutor(max_workers=min(workers, t)) as pool_exec:
            sim_parts = list(
                pool_exec.map(
                    lambda i: adjacent_cosine(_frame_slice(grid, i)), range(t)
                )
            )
    else:
        sim_parts = [adjacent_cosine(_frame_slice(grid, i)) for i in range(t)]
    sims = SimilarityGrid(np.concatenate([s.values for s in sim_parts], axis=0))
    maps = [build_groups(sims, th) for th in values]
    stats = [stats_from_groups(m) for m in maps]
    return grid, sims, maps, stats
