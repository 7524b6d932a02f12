"""Compression accounting: stats, threshold sweeps, token-budget curves.

The kept-token ratio counts row markers in both numerator and
denominator, (fused + markers) / (original + markers). That convention
is what makes the 96-frame 14x14 baseline come out to 96*(196+14) =
20160 sequence entries; with markers excluded the arithmetic does not
match the budget formula.
"""

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .fusion import CompressedSequence
from .grouping import GroupMap, as_threshold, build_groups, group_counts
from .similarity import adjacent_cosine


@dataclass(frozen=True)
class CompressionStats:
    """Token accounting for one compressed sequence.

    ``per_row_group_histogram`` maps groups-per-row to how many rows had
    that count. ``per_threshold`` optionally carries (threshold, ratio)
    pairs when the record summarizes a sweep.
    """

    original_tokens: int
    fused_tokens: int
    markers: int
    ratio_tokens_kept: float
    per_row_group_histogram: dict
    threshold: float | None = None
    per_threshold: tuple | None = None


@dataclass(frozen=True)
class BudgetPoint:
    """One point of the frames-versus-compression trade-off curve."""

    frames: int
    ratio: float
    total_tokens: int


def _kept_ratio(fused, markers, original):
    return (fused + markers) / (original + markers)


def _stats_from_counts(counts, w, threshold):
    t, h = counts.shape
    original = t * h * w
    markers = t * h
    fused = int(counts.sum())
    values, mult = np.unique(counts, return_counts=True)
    histogram = {int(v): int(m) for v, m in zip(values, mult)}
    return CompressionStats(
        original_tokens=original,
        fused_tokens=fused,
        markers=markers,
        ratio_tokens_kept=_kept_ratio(fused, markers, original),
        per_row_group_histogram=histogram,
        threshold=threshold,
    )


def compute_stats(seq, original, threshold=None):
    """Stats for a sequence produced from a grid of shape ``original``."""
    if not isinstance(seq, CompressedSequence):
        raise TypeError(f"expected CompressedSequence, got {type(seq).__name__}")
    original = tuple(int(v) for v in original)
    if seq.source_shape != original:
        raise ValueError(
            f"sequence came from grid {seq.source_shape}, "
            f"stats requested for {original}"
        )
    _, _, w = original
    return _stats_from_counts(seq.groups_per_row(), w, threshold)


def stats_from_groups(gmap):
    """Stats straight from a GroupMap, without materializing fused tokens."""
    if not isinstance(gmap, GroupMap):
        raise TypeError(f"expected GroupMap, got {type(gmap).__name__}")
    _, _, w = gmap.shape
    return _stats_from_counts(group_counts(gmap), w, gmap.threshold)


def threshold_sweep(grid, thresholds):
    """One stats record per threshold, ascending; similarities computed once."""
    values = [as_threshold(th) for th in thresholds]
    if not values:
        raise ValueError("threshold sweep needs at least one threshold")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"thresholds must be strictly ascending, got {values}")
    sims = adjacent_cosine(grid)
    return [stats_from_groups(build_groups(sims, th)) for th in values]


def budget_curve(h, w, frame_counts, ratios):
    """Total-token curve over frame counts x kept ratios.

    Each point is frames * round(ratio * h * w + h): per-frame fused
    tokens at the given kept ratio plus one marker per row, rounded once
    (Python banker's rounding) before scaling by the frame count.
    """
    h = int(h)
    w = int(w)
    if h < 1 or w < 1:
        raise ValueError(f"rows and cols must be >= 1, got {h}, {w}")
    frame_counts = [int(f) for f in frame_counts]
    ratios = [float(r) for r in ratios]
    if not frame_counts or any(f < 1 for f in frame_counts):
        raise ValueError(f"frame counts must be positive, got {frame_counts}")
    if not ratios or any(not (0.0 < r <= 1.0) for r in ratios):
        raise ValueError(f"ratios must be in (0, 1], got {ratios}")
    points = []
    for frames in frame_counts:
        for ratio in ratios:
            per_frame = round(ratio * h * w + h)
            points.append(BudgetPoint(frames, ratio, frames * per_frame))
    return points


def stats_to_json(stats):
    """Fixed-key-order JSON document for golden-file comparisons."""
    doc = {
        "original": stats.original_tokens,
        "fused": stats.fused_tokens,
        "markers": stats.markers,
        "ratio": stats.ratio_tokens_kept,
        "histogram": {
            str(k): stats.per_row_group_histogram[k]
            for k in sorted(stats.per_row_group_histogram)
        },
        "threshold": stats.threshold,
    }
    if stats.per_threshold is not None:
        doc["per_threshold"] = [[th, r] for th, r in stats.per_threshold]
    return json.dumps(doc, indent=2) + "\n"


def sweep_to_csv(stats_list):
    """CSV rows (threshold, ratio, fused, total) for a sweep."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["threshold", "ratio", "fused", "total"])
    for st in stats_list:
        writer.writerow(
            [
                st.threshold,
                st.ratio_tokens_kept,
                st.fused_tokens,
                st.fused_tokens + st.markers,
            ]
        )
    return buf.getvalue()


def budget_to_csv(points):
    """CSV rows (frames, ratio, total_tokens) for a budget curve."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["frames", "ratio", "total_tokens"])
    for p in points:
        writer.writerow([p.frames, p.ratio, p.total_tokens])
    return buf.getvalue()
