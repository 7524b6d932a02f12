"""Cosine similarity between horizontally adjacent patch vectors.

Similarity is always computed on the vision-space tensor of a grid pair
(contrastively trained encoder features suit cosine comparison), never
on the embedding-space tokens that later get fused.
"""

from dataclasses import dataclass

import numpy as np

from .grids import FrameGridPair


@dataclass(frozen=True)
class SimilarityGrid:
    """Adjacent-pair similarities, shape (t, h, w-1) float32.

    Entry (i, j, k) is the cosine similarity between patch columns k and
    k+1 in row j of frame i. Values lie in [-1, 1] up to float rounding.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 3:
            raise ValueError(
                f"similarity values must be 3-D (t, h, w-1), got {arr.ndim}-D"
            )
        if arr.dtype != np.float32:
            raise ValueError(f"similarity values must be float32, got {arr.dtype}")
        view = arr.view()
        view.flags.writeable = False
        object.__setattr__(self, "values", view)

    @property
    def shape(self):
        return self.values.shape


def adjacent_cosine(grid):
    """Similarity of each patch column to its right neighbor, per row.

    Dot products and norms accumulate in float64 and the result is
    stored as float32. A zero-norm vector has similarity 0 to any
    neighbor, so degenerate patches never merge silently (0 is at or
    below every useful threshold).
    """
    if not isinstance(grid, FrameGridPair):
        raise TypeError(f"expected FrameGridPair, got {type(grid).__name__}")
    x = grid.vision
    t, h, w, _ = x.shape
    if w == 1:
        return SimilarityGrid(np.empty((t, h, 0), dtype=np.float32))
    left = x[:, :, :-1, :]
    right = x[:, :, 1:, :]
    dots = np.einsum("thwd,thwd->thw", left, right, dtype=np.float64)
    norms = np.sqrt(np.einsum("thwd,thwd->thw", x, x, dtype=np.float64))
    denom = norms[:, :, :-1] * norms[:, :, 1:]
    sims = np.zeros_like(dots)
    np.divide(dots, denom, out=sims, where=denom > 0.0)
    return SimilarityGrid(sims.astype(np.float32))
