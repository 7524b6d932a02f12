"""Dynamic visual-token compression for video patch grids.

Patch tokens are compared to their left neighbor with cosine similarity
in vision space, split into contiguous per-row groups wherever the
similarity fails to exceed a threshold, and each group's embedding-space
tokens are averaged into one fused token; a marker after every row keeps
the spatial layout recoverable. Flat image regions collapse to a handful
of tokens while busy regions survive intact, so the sequence fed to a
language model shrinks without a fixed pooling rate.
"""

__version__ = "0.1.0"

from .analysis import (
    BudgetPoint,
    CompressionStats,
    budget_curve,
    budget_to_csv,
    compute_stats,
    stats_from_groups,
    stats_to_json,
    sweep_to_csv,
    threshold_sweep,
)
from .fusion import (
    CompressedSequence,
    Fused,
    RowMarker,
    SequenceFormatError,
    flatten_baseline,
    fuse,
    load_sequence,
    save_sequence,
    sequence_summary,
)
from .grids import FrameGridPair, GridFormatError, load_grid, save_grid
from .grouping import (
    TRAINING_THRESHOLDS,
    GroupMap,
    Threshold,
    as_threshold,
    build_groups,
    group_counts,
    group_map_from_json,
    group_map_to_json,
    identity_groups,
)
from .pipeline import CompressionResult, compress_grid, resolve_threads, sweep_grid
from .pooling import POOL2, PoolError, PoolSpec, pool, static_compress
from .render import (
    MaskImage,
    RenderError,
    gray_patch_count,
    pgm_bytes,
    ppm_bytes,
    render_mask,
    render_sweep,
    write_pgm,
    write_ppm,
)
from .scenes import (
    SceneError,
    SceneSpec,
    SegmentSpec,
    generate_synthetic,
    load_scene,
    save_scene,
    scene_from_json,
    scene_to_json,
)
from .similarity import SimilarityGrid, adjacent_cosine

__all__ = [
    "BudgetPoint",
    "CompressedSequence",
    "CompressionResult",
    "CompressionStats",
    "FrameGridPair",
    "Fused",
    "GridFormatError",
    "GroupMap",
    "MaskImage",
    "POOL2",
    "PoolError",
    "PoolSpec",
    "RenderError",
    "RowMarker",
    "SceneError",
    "SceneSpec",
    "SegmentSpec",
    "SequenceFormatError",
    "SimilarityGrid",
    "TRAINING_THRESHOLDS",
    "Threshold",
    "as_threshold",
    "adjacent_cosine",
    "budget_curve",
    "budget_to_csv",
    "build_groups",
    "compress_grid",
    "compute_stats",
    "flatten_baseline",
    "fuse",
    "generate_synthetic",
    "gray_patch_count",
    "group_counts",
    "group_map_from_json",
    "group_map_to_json",
    "identity_groups",
    "load_grid",
    "load_scene",
    "load_sequence",
    "pgm_bytes",
    "pool",
    "ppm_bytes",
    "render_mask",
    "render_sweep",
    "resolve_threads",
    "save_grid",
    "save_scene",
    "save_sequence",
    "scene_from_json",
    "scene_to_json",
    "sequence_summary",
    "static_compress",
    "stats_from_groups",
    "stats_to_json",
    "sweep_grid",
    "sweep_to_csv",
    "threshold_sweep",
    "write_pgm",
    "write_ppm",
    "__version__",
]
