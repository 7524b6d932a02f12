"""Merge-mask rasterization and netpbm writers.

A mask shows which patches merged leftward: group-start patches render
white (255), merged patches gray (128), each patch as a scale x scale
block. Masks go out as binary PGM (P5) and overlays as binary PPM (P6);
both are header-plus-raw formats, so identical inputs give byte-identical
files and goldens stay stable without any imaging dependency.
"""

from dataclasses import dataclass

import numpy as np

from .grouping import GroupMap

GRAY = 128
WHITE = 255


class RenderError(ValueError):
    """Invalid rendering arguments."""


@dataclass(frozen=True)
class MaskImage:
    """8-bit raster: (H, W) grayscale or (H, W, 3) RGB uint8."""

    pixels: np.ndarray
    scale: int

    def __post_init__(self):
        px = self.pixels
        if px.dtype != np.uint8 or px.ndim not in (2, 3):
            raise RenderError("pixels must be a uint8 (H, W) or (H, W, 3) array")
        if px.ndim == 3 and px.shape[2] != 3:
            raise RenderError(f"RGB pixels need 3 channels, got {px.shape[2]}")
        view = px.view()
        view.flags.writeable = False
        object.__setattr__(self, "pixels", view)

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def is_rgb(self):
        return self.pixels.ndim == 3


def _patch_values(gmap):
    # white where a group starts, gray where the patch merged leftward
    return np.where(gmap.start_mask, WHITE, GRAY).astype(np.uint8)


def _upscale(patches, scale):
    return np.repeat(np.repeat(patches, scale, axis=0), scale, axis=1)


def render_mask(gmap, scale, overlay=None):
    """Mask images, one per frame.

    ``overlay`` optionally supplies a pre-rasterized patch-grid image of
    shape (t, h*scale, w*scale, 3) uint8; merged patches then blend
    half-and-half with gray, group starts keep their pixels, and the
    outputs are RGB instead of grayscale.
    """
    if not isinstance(gmap, GroupMap):
        raise RenderError(f"expected GroupMap, got {type(gmap).__name__}")
    scale = int(scale)
    if scale < 1:
        raise RenderError(f"scale must be a positive integer, got {scale}")
    t, h, w = gmap.shape
    values = _patch_values(gmap)
    if overlay is None:
        return [MaskImage(_upscale(values[i], scale), scale) for i in range(t)]
    overlay = np.asarray(overlay)
    if overlay.shape != (t, h * scale, w * scale, 3) or overlay.dtype != np.uint8:
        raise RenderError(
            f"overlay must be uint8 of shape {(t, h * scale, w * scale, 3)}, "
            f"got {overlay.dtype} {overlay.shape}"
        )
    images = []
    for i in range(t):
        merged = _upscale(gmap.start_mask[i], scale)
        base = overlay[i]
        # integer blend keeps outputs bit-exact: (pixel + gray) // 2
        blended = ((base.astype(np.uint16) + GRAY) // 2).astype(np.uint8)
        px = np.where(merged[:, :, None], base, blended)
        images.append(MaskImage(px, scale))
    return images


def render_sweep(maps, scale):
    """Tile per-threshold masks side by side, one image per frame.

    Maps must share (t, h, w) and come in strictly ascending threshold
    order; tiles are separated by a one-patch white gutter.
    """
    if not maps:
        raise RenderError("sweep rendering needs at least one group map")
    scale = int(scale)
    if scale < 1:
        raise RenderError(f"scale must be a positive integer, got {scale}")
    shape = maps[0].shape
    if any(m.shape != shape for m in maps):
        raise RenderError(
            f"all group maps must share (t, h, w), got {[m.shape for m in maps]}"
        )
    thresholds = [m.threshold for m in maps]
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise RenderError(
            f"group maps must be in ascending threshold order, got {thresholds}"
        )
    t, h, w = shape
    gutter = np.full((h, 1), WHITE, dtype=np.uint8)
    images = []
    for i in range(t):
        tiles = []
        for k, gmap in enumerate(maps):
            if k:
                tiles.append(gutter)
            tiles.append(_patch_values(gmap)[i])
        patches = np.concatenate(tiles, axis=1)
        images.append(MaskImage(_upscale(patches, scale), scale))
    return images


def gray_patch_count(gmap):
    """Merged-patch total: t*h*w minus the number of groups."""
    t, h, w = gmap.shape
    return t * h * w - int(gmap.start_mask.sum())


def pgm_bytes(img):
    if img.is_rgb:
        raise RenderError("PGM holds grayscale images; use PPM for RGB")
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def ppm_bytes(img):
    if not img.is_rgb:
        raise RenderError("PPM holds RGB images; use PGM for grayscale")
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def write_pgm(img, path):
    with open(path, "wb") as fh:
        fh.write(pgm_bytes(img))


def write_ppm(img, path):
    with open(path, "wb") as fh:
        fh.write(ppm_bytes(img))
