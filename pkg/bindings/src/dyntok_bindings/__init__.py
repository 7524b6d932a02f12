"""In-process bindings for the dyntok compressor.

Callers hand over two (t, h, w, d) float buffers and get back plain
numpy arrays plus a stats dict; no file round-trip, and no core object
types cross the boundary. All numerics and validation live in the core
package: outputs are bitwise identical to a DTG -> compress -> DTC run
on the same data, and errors propagate with the exact diagnostic text
the dyntok CLI prints.

Inputs that are already C-contiguous float32 are wrapped as zero-copy
views; anything else is converted once. The functions are reentrant,
so arrays may be compressed from several threads at once.
"""

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from dyntok import __version__ as _core_version
from dyntok import (
    FrameGridPair,
    as_threshold,
    compress_grid,
    stats_to_json,
    sweep_grid,
)

__version__ = "0.1.0"

__all__ = [
    "BoundCompressor",
    "CompressedArrays",
    "compress_arrays",
    "sweep_arrays",
    "version",
]


def version():
    """Version string of the wrapped core package."""
    return _core_version


class CompressedArrays(NamedTuple):
    """Flat-buffer view of one compression run.

    ``fused`` is (l, d_emb) float32, one row per merged group in raster
    order. ``marker_offsets`` is (t*h,) int64: how many fused tokens
    precede each row-end marker. ``provenance`` is (l, 4) int32 rows of
    (frame, row, start col, end col exclusive). ``stats`` is a plain
    dict with the same keys as the CLI stats JSON document.
    """

    fused: np.ndarray
    marker_offsets: np.ndarray
    provenance: np.ndarray
    stats: dict


def _record(stats):
    # parse the core's own JSON document so both surfaces share one
    # vocabulary and one formatting path
    return json.loads(stats_to_json(stats))


@dataclass(frozen=True)
class BoundCompressor:
    """Threshold and pooling toggle, validated once at construction."""

    threshold: float
    pool2: bool = False

    def __post_init__(self):
        object.__setattr__(self, "threshold", as_threshold(self.threshold))
        object.__setattr__(self, "pool2", bool(self.pool2))

    def compress(self, vision, embedding):
        result = compress_grid(
            FrameGridPair(vision, embedding),
            self.threshold,
            pool_spec=True if self.pool2 else None,
        )
        seq = result.sequence
        return CompressedArrays(
            fused=seq.fused,
            marker_offsets=seq.marker_offsets(),
            provenance=seq.provenance,
            stats=_record(result.stats),
        )

    def sweep(self, vision, embedding, thresholds):
        _, _, _, stats = sweep_grid(
            FrameGridPair(vision, embedding),
            thresholds,
            pool_spec=True if self.pool2 else None,
        )
        return [_record(s) for s in stats]


def compress_arrays(vision, embedding, threshold, pool2=False):
    """Compress caller-supplied (t, h, w, d) arrays at one threshold.

    Returns CompressedArrays. Bad shapes, non-finite values and invalid
    thresholds raise the core's exceptions unchanged.
    """
    return BoundCompressor(threshold, pool2).compress(vision, embedding)


def sweep_arrays(vision, embedding, thresholds, pool2=False):
    """Stats records over strictly ascending thresholds.

    Similarities are computed once and regrouped per threshold; fused
    payloads are not materialized. Returns a list of stats dicts.
    """
    _, _, _, stats = sweep_grid(
        FrameGridPair(vision, embedding),
        thresholds,
        pool_spec=True if pool2 else None,
    )
    return [_record(s) for s in stats]
