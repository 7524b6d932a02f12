"""Synthetic frame-grid generation from declarative scene specs.

A scene describes each patch row as a list of segments. Real encoder
output shows the same structure at full scale: flat regions produce runs
of near-identical patch vectors while busy regions decorrelate, so a
handful of segment modes is enough to exercise every compression path:

``constant``
    One base vector repeated exactly for the whole segment (adjacent
    similarity is exactly 1.0 after float32 rounding).
``jittered``
    ``normalize(u + delta)`` around a base unit vector ``u`` with
    ``norm(delta) <= epsilon``; any two vectors in the segment then have
    cosine similarity >= 1 - 2*epsilon**2 (each is within angle
    ``asin(epsilon)`` of ``u``).
``random``
    Independent isotropic unit vectors; expected pairwise cosine is 0
    with standard deviation about ``1/sqrt(d)``.

Generation is a pure function of (scene, seed): draws happen in a fixed
documented order (frame, then row, then segment; vision base, embedding
base, then per-patch deltas), so equal inputs give bitwise-equal grids.
"""

import json
from dataclasses import dataclass

import numpy as np

from .grids import FrameGridPair

MODE_CONSTANT = "constant"
MODE_JITTERED = "jittered"
MODE_RANDOM = "random"
MODES = (MODE_CONSTANT, MODE_JITTERED, MODE_RANDOM)


class SceneError(ValueError):
    """A scene spec is internally inconsistent."""


@dataclass(frozen=True)
class SegmentSpec:
    """A run of ``length`` patches generated in one mode.

    ``epsilon`` is required for jittered segments (0 < epsilon < 1).
    ``vector`` optionally pins the vision-space base vector of a constant
    or jittered segment (length d_clip); without it the base is drawn
    from the seeded generator. Embedding-space bases are always drawn.
    """

    length: int
    mode: str
    epsilon: float | None = None
    vector: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.length < 1:
            raise SceneError(f"segment length must be >= 1, got {self.length}")
        if self.mode not in MODES:
            raise SceneError(f"unknown segment mode {self.mode!r}, expected one of {MODES}")
        if self.mode == MODE_JITTERED:
            if self.epsilon is None or not (0.0 < self.epsilon < 1.0):
                raise SceneError(
                    f"jittered segment needs epsilon in (0, 1), got {self.epsilon}"
                )
        elif self.epsilon is not None:
            raise SceneError("epsilon is only valid for jittered segments")
        if self.vector is not None:
            if self.mode == MODE_RANDOM:
                raise SceneError("random segments cannot pin a base vector")
            vec = tuple(float(v) for v in self.vector)
            if self.mode == MODE_JITTERED and not any(vec):
                raise SceneError("jittered segment base vector must be nonzero")
            object.__setattr__(self, "vector", vec)


@dataclass(frozen=True)
class SceneSpec:
    """Scene layout: per-row segments applied to every frame.

    All rows must cover the same column count w; segment lengths not
    summing to w is an error. Constant and jittered bases are drawn per
    (frame, row, segment), so frames differ unless a vector is pinned.
    """

    frames: int
    d_clip: int
    d_emb: int
    rows: tuple[tuple[SegmentSpec, ...], ...]

    def __post_init__(self):
        if self.frames < 1:
            raise SceneError(f"frames must be >= 1, got {self.frames}")
        if self.d_clip < 1 or self.d_emb < 1:
            raise SceneError(
                f"d_clip and d_emb must be >= 1, got {self.d_clip}, {self.d_emb}"
            )
        if not self.rows or any(not row for row in self.rows):
            raise SceneError("scene needs at least one row, each with >= 1 segment")
        rows = tuple(tuple(seg for seg in row) for row in self.rows)
        object.__setattr__(self, "rows", rows)
        widths = {sum(seg.length for seg in row) for row in rows}
        if len(widths) != 1:
            raise SceneError(
                f"segment lengths must sum to the same w in every row, got sums {sorted(widths)}"
            )
        for row in rows:
            for seg in row:
                if seg.vector is not None and len(seg.vector) != self.d_clip:
                    raise SceneError(
                        f"pinned vector has length {len(seg.vector)}, d_clip is {self.d_clip}"
                    )

    @property
    def rows_count(self):
        return len(self.rows)

    @property
    def cols(self):
        return sum(seg.length for seg in self.rows[0])


def _unit(rng, d):
    v = rng.standard_normal(d)
    n = float(np.linalg.norm(v))
    if n == 0.0:  # probability ~0; keep determinism instead of redrawing
        v = np.zeros(d)
        v[0] = 1.0
        return v
    return v / n


def _segment_block(rng, seg, d, base):
    """Vectors for one segment in one space, shape (length, d) float64."""
    if base is None:
        base = _unit(rng, d)
    elif seg.mode == MODE_JITTERED:
        # the similarity bound assumes a unit base
        base = base / np.linalg.norm(base)
    if seg.mode == MODE_CONSTANT:
        return np.tile(base, (seg.length, 1))
    if seg.mode == MODE_JITTERED:
        # delta = direction * radius with radius uniform in [0, epsilon],
        # so norm(delta) <= epsilon always holds.
        out = np.empty((seg.length, d))
        for i in range(seg.length):
            direction = _unit(rng, d)
            radius = rng.uniform(0.0, seg.epsilon)
            v = base + radius * direction
            out[i] = v / np.linalg.norm(v)
        return out
    out = np.empty((seg.length, d))
    for i in range(seg.length):
        out[i] = _unit(rng, d)
    return out


def generate_synthetic(scene, seed):
    """Generate a FrameGridPair from ``scene``, deterministic in ``seed``."""
    if not isinstance(scene, SceneSpec):
        raise SceneError(f"expected SceneSpec, got {type(scene).__name__}")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    t, h, w = scene.frames, scene.rows_count, scene.cols
    vision = np.empty((t, h, w, scene.d_clip), dtype=np.float32)
    embedding = np.empty((t, h, w, scene.d_emb), dtype=np.float32)
    for i in range(t):
        for j, row in enumerate(scene.rows):
            col = 0
            for seg in row:
                pinned = None
                if seg.vector is not None:
                    pinned = np.asarray(seg.vector, dtype=np.float64)
                vis = _segment_block(rng, seg, scene.d_clip, pinned)
                emb = _segment_block(rng, seg, scene.d_emb, None)
                vision[i, j, col : col + seg.length] = vis
                embedding[i, j, col : col + seg.length] = emb
                col += seg.length
    return FrameGridPair(vision, embedding)


def _segment_to_json(seg):
    out = {"length": seg.length, "mode": seg.mode}
    if seg.epsilon is not None:
        out["epsilon"] = seg.epsilon
    if seg.vector is not None:
        out["vector"] = list(seg.vector)
    return out


def _segment_from_json(obj):
    try:
        return SegmentSpec(
            length=int(obj["length"]),
            mode=str(obj["mode"]),
            epsilon=obj.get("epsilon"),
            vector=obj.get("vector"),
        )
    except KeyError as exc:
        raise SceneError(f"segment spec missing field {exc}") from None


def scene_to_json(scene):
    """Serialize a SceneSpec to a JSON string."""
    doc = {
        "frames": scene.frames,
        "d_clip": scene.d_clip,
        "d_emb": scene.d_emb,
        "rows": [[_segment_to_json(seg) for seg in row] for row in scene.rows],
    }
    return json.dumps(doc, indent=2) + "\n"


def scene_from_json(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"scene file is not valid JSON: {exc}") from None
    try:
        rows = tuple(
            tuple(_segment_from_json(seg) for seg in row) for row in doc["rows"]
        )
        return SceneSpec(
            frames=int(doc["frames"]),
            d_clip=int(doc["d_clip"]),
            d_emb=int(doc["d_emb"]),
            rows=rows,
        )
    except KeyError as exc:
        raise SceneError(f"scene spec missing field {exc}") from None


def load_scene(path):
    with open(path, "r", encoding="utf-8") as fh:
        return scene_from_json(fh.read())


def save_scene(scene, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(scene_to_json(scene))
