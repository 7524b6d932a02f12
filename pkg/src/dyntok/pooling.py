"""Static pooling: the fixed-rate preprocessing and comparison baseline.

Mean pooling averages each kernel window; bilinear pooling with kernel 2
and stride 2 degenerates to exactly the same equal-weight 2x2 average,
which is the only configuration the bilinear mode accepts. Pooling
applies to both tensors of a pair so the similarity and fusion domains
stay aligned downstream (the usual pipeline is pool 28x28 down to 14x14,
then compress).
"""

from dataclasses import dataclass

import numpy as np

from .fusion import flatten_baseline
from .grids import FrameGridPair


class PoolError(ValueError):
    """Pool spec invalid or incompatible with the grid dimensions."""


@dataclass(frozen=True)
class PoolSpec:
    """Window pooling parameters; the default halves each grid side."""

    kernel: tuple = (2, 2)
    stride: tuple = (2, 2)
    mode: str = "bilinear"

    def __post_init__(self):
        kernel = tuple(int(k) for k in self.kernel)
        stride = tuple(int(s) for s in self.stride)
        if len(kernel) != 2 or min(kernel) < 1:
            raise PoolError(f"kernel must be two positive ints, got {self.kernel}")
        if len(stride) != 2 or min(stride) < 1:
            raise PoolError(f"stride must be two positive ints, got {self.stride}")
        if self.mode not in ("bilinear", "mean"):
            raise PoolError(f"mode must be 'bilinear' or 'mean', got {self.mode!r}")
        if self.mode == "bilinear" and (kernel != (2, 2) or stride != (2, 2)):
            # equal weights only hold in the degenerate 2x2/2 case; other
            # shapes must ask for mean pooling explicitly
            raise PoolError(
                "bilinear mode supports only kernel (2, 2) with stride (2, 2); "
                "use mode='mean' for other shapes"
            )
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "stride", stride)


POOL2 = PoolSpec()


def _pool_tensor(x, kh, kw, sh, sw, oh, ow):
    t = x.shape[0]
    d = x.shape[3]
    acc = np.zeros((t, oh, ow, d), dtype=np.float64)
    for dy in range(kh):
        for dx in range(kw):
            acc += x[:, dy : dy + oh * sh : sh, dx : dx + ow * sw : sw, :]
    return (acc / (kh * kw)).astype(np.float32)


def pool(grid, spec):
    """Window-average both tensors; output shape (t, oh, ow, d).

    Window rows start at multiples of the stride; the last window must
    end exactly at the grid edge, otherwise the dimensions are rejected
    as indivisible.
    """
    if not isinstance(grid, FrameGridPair):
        raise PoolError(f"expected FrameGridPair, got {type(grid).__name__}")
    if not isinstance(spec, PoolSpec):
        raise PoolError(f"expected PoolSpec, got {type(spec).__name__}")
    t, h, w = grid.grid_shape
    kh, kw = spec.kernel
    sh, sw = spec.stride
    if h < kh or (h - kh) % sh != 0 or w < kw or (w - kw) % sw != 0:
        raise PoolError(
            f"grid {h}x{w} is indivisible by kernel {kh}x{kw} with "
            f"stride {sh}x{sw}"
        )
    oh = (h - kh) // sh + 1
    ow = (w - kw) // sw + 1
    pooled_vision = _pool_tensor(grid.vision, kh, kw, sh, sw, oh, ow)
    if grid.embedding_equals_vision():
        return FrameGridPair(pooled_vision, pooled_vision)
    pooled_embedding = _pool_tensor(grid.embedding, kh, kw, sh, sw, oh, ow)
    return FrameGridPair(pooled_vision, pooled_embedding)


def static_compress(grid, spec):
    """Pool then flatten: the input-independent token-count baseline."""
    return flatten_baseline(pool(grid, spec))
