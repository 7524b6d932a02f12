"""Row-wise partition of patch columns into contiguous merge groups.

The first column of every row starts a group. Each later column joins
its left neighbor's group when their similarity strictly exceeds the
threshold, otherwise it starts a new group. Similarity exactly equal to
the threshold therefore splits: merging requires the similarity to
exceed the threshold, and resolving the tie as a split keeps alternate
implementations bit-for-bit comparable. Merging never crosses rows or
frames, which is what preserves the spatial layout.

Comparisons happen at float32 resolution, the precision similarities are
stored at: the threshold is rounded to float32 before comparing, so a
stored similarity that equals the rounded threshold is an exact tie and
splits. Without the rounding, float64(0.6) sits just below float32(0.6)
and the documented tie behavior would be unreachable.
"""

import json
from dataclasses import dataclass

import numpy as np

from .similarity import SimilarityGrid

# threshold ladder used for training-style sweeps
TRAINING_THRESHOLDS = (0.4, 0.45, 0.5, 0.55, 0.6)


@dataclass(frozen=True)
class Threshold:
    """Similarity cutoff, valid in (-1, 1]."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if not (-1.0 < v <= 1.0):  # also rejects NaN
            raise ValueError(f"threshold must be in (-1, 1], got {self.value}")
        object.__setattr__(self, "value", v)


def as_threshold(threshold):
    """Validate ``threshold`` (float or Threshold) and return the float."""
    if isinstance(threshold, Threshold):
        return threshold.value
    return Threshold(threshold).value


@dataclass(frozen=True)
class GroupMap:
    """Per-row partition into contiguous groups at one threshold.

    ``start_mask`` has shape (t, h, w) bool; entry (i, j, k) is True iff
    column k starts a group in row j of frame i. Column 0 is always a
    start, so every row has between 1 and w groups.
    """

    threshold: float
    start_mask: np.ndarray

    def __post_init__(self):
        mask = self.start_mask
        if mask.ndim != 3 or mask.dtype != np.bool_:
            raise ValueError("start_mask must be a (t, h, w) bool array")
        if not mask[:, :, 0].all():
            raise ValueError("column 0 must start a group in every row")
        view = mask.view()
        view.flags.writeable = False
        object.__setattr__(self, "start_mask", view)
        object.__setattr__(self, "threshold", float(self.threshold))

    @property
    def shape(self):
        return self.start_mask.shape

    def row_starts(self, frame, row):
        """Ascending group-start column indices for one row."""
        return np.flatnonzero(self.start_mask[frame, row])

    def __eq__(self, other):
        if not isinstance(other, GroupMap):
            return NotImplemented
        return self.threshold == other.threshold and np.array_equal(
            self.start_mask, other.start_mask
        )


def build_groups(sims, threshold):
    """Partition every row of ``sims`` at ``threshold``.

    Column k >= 1 starts a group iff similarity(k-1, k) <= threshold,
    with the comparison done in float32 (see module docstring).
    Pure function: identical inputs give identical GroupMaps.
    """
    if not isinstance(sims, SimilarityGrid):
        raise TypeError(f"expected SimilarityGrid, got {type(sims).__name__}")
    th = as_threshold(threshold)
    t, h, w_minus_1 = sims.values.shape
    mask = np.ones((t, h, w_minus_1 + 1), dtype=np.bool_)
    mask[:, :, 1:] = sims.values <= np.float32(th)
    return GroupMap(threshold=th, start_mask=mask)


def identity_groups(t, h, w):
    """The degenerate partition of w singleton groups per row."""
    return GroupMap(threshold=1.0, start_mask=np.ones((t, h, w), dtype=np.bool_))


def group_counts(gmap):
    """Number of groups per row as a (t, h) int64 tensor."""
    return gmap.start_mask.sum(axis=2, dtype=np.int64)


def group_map_to_json(gmap):
    """Serialize to JSON: threshold, shape, frame -> row -> start indices."""
    t, h, w = gmap.shape
    doc = {
        "threshold": gmap.threshold,
        "shape": [t, h, w],
        "starts": [
            [gmap.row_starts(i, j).tolist() for j in range(h)] for i in range(t)
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def group_map_from_json(text):
    doc = json.loads(text)
    t, h, w = (int(v) for v in doc["shape"])
    mask = np.zeros((t, h, w), dtype=np.bool_)
    for i, frame in enumerate(doc["starts"]):
        for j, starts in enumerate(frame):
            mask[i, j, np.asarray(starts, dtype=np.int64)] = True
    return GroupMap(threshold=float(doc["threshold"]), start_mask=mask)
