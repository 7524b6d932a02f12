"""Frame-grid containers and the DTG binary file format.

A frame grid holds two aligned float32 tensors for ``t`` video frames of
``h x w`` patches each: the vision-space features used for similarity
(dimension ``d_clip``) and the embedding-space tokens that get fused
(dimension ``d_emb``).

DTG format v1 (all integers little-endian):

    offset  size  field
    0       4     magic ``DTGR``
    4       4     u32 version, must be 1
    8       4     u32 flags; bit 0 set means the embedding tensor equals
                  the vision tensor and is not stored again
    12      4     u32 t   (frames, >= 1)
    16      4     u32 h   (patch rows, >= 1)
    20      4     u32 w   (patch cols, >= 1)
    24      4     u32 d_clip (>= 1)
    28      4     u32 d_emb  (>= 1; == d_clip when bit 0 of flags is set)
    32      ...   payload: vision tensor as row-major (t, h, w, d_clip)
                  float32, then the embedding tensor as row-major
                  (t, h, w, d_emb) float32 unless flags bit 0 is set,
                  in which case the second tensor is omitted

Payload length is exactly ``t*h*w*(d_clip+d_emb)*4`` bytes, or
``t*h*w*d_clip*4`` when flags bit 0 is set. Non-finite floats are
rejected on both save and load.
"""

import struct

import numpy as np

MAGIC = b"DTGR"
FORMAT_VERSION = 1
FLAG_EMBEDDING_EQUALS_VISION = 0x1

_HEADER = struct.Struct("<4s7I")
HEADER_SIZE = _HEADER.size


class GridFormatError(ValueError):
    """A grid or DTG file violates the format contract."""


def _as_readonly_f32(arr, name):
    """Return a C-contiguous float32 read-only view of ``arr``.

    Copies at most once (dtype or layout conversion); an already
    contiguous float32 array is only re-wrapped, never copied.
    """
    a = np.asarray(arr)
    if a.dtype != np.float32:
        a = a.astype(np.float32)
    if not a.flags.c_contiguous:
        a = np.ascontiguousarray(a)
    view = a.view()
    view.flags.writeable = False
    return view


def _check_finite(arr, name):
    bad = np.flatnonzero(~np.isfinite(arr.reshape(-1)))
    if bad.size:
        flat = int(bad[0])
        idx = tuple(int(i) for i in np.unravel_index(flat, arr.shape))
        raise GridFormatError(
            f"non-finite value in {name} tensor at index {idx}"
        )


class FrameGridPair:
    """Paired per-patch grids for ``t`` frames of ``h x w`` patches.

    ``vision`` is the similarity domain, ``embedding`` the fusion domain.
    Both tensors are validated (4-D, shared leading shape, finite) and
    held as read-only float32 views, so a pair is immutable after
    construction and safe to share across threads.
    """

    __slots__ = ("vision", "embedding")

    def __init__(self, vision, embedding):
        vision = _as_readonly_f32(vision, "vision")
        embedding = _as_readonly_f32(embedding, "embedding")
        if vision.ndim != 4:
            raise GridFormatError(
                f"vision tensor must be 4-D (t, h, w, d_clip), got {vision.ndim}-D"
            )
        if embedding.ndim != 4:
            raise GridFormatError(
                f"embedding tensor must be 4-D (t, h, w, d_emb), got {embedding.ndim}-D"
            )
        if vision.shape[:3] != embedding.shape[:3]:
            raise GridFormatError(
                "vision and embedding must share (t, h, w): "
                f"{vision.shape[:3]} vs {embedding.shape[:3]}"
            )
        t, h, w, d_clip = vision.shape
        if min(t, h, w, d_clip, embedding.shape[3]) < 1:
            raise GridFormatError(
                f"all dimensions must be >= 1, got vision {vision.shape}, "
                f"embedding {embedding.shape}"
            )
        _check_finite(vision, "vision")
        same_storage = (
            embedding.shape == vision.shape
            and embedding.__array_interface__["data"][0]
            == vision.__array_interface__["data"][0]
        )
        if not same_storage:
            _check_finite(embedding, "embedding")
        object.__setattr__(self, "vision", vision)
        object.__setattr__(self, "embedding", embedding)

    def __setattr__(self, name, value):
        raise AttributeError("FrameGridPair is immutable")

    @classmethod
    def from_single(cls, tensor):
        """Build a pair whose embedding tensor is the vision tensor."""
        view = _as_readonly_f32(tensor, "vision")
        return cls(view, view)

    @property
    def frames(self):
        return self.vision.shape[0]

    @property
    def rows(self):
        return self.vision.shape[1]

    @property
    def cols(self):
        return self.vision.shape[2]

    @property
    def d_clip(self):
        return self.vision.shape[3]

    @property
    def d_emb(self):
        return self.embedding.shape[3]

    @property
    def grid_shape(self):
        """Leading (t, h, w) shape shared by both tensors."""
        return self.vision.shape[:3]

    def embedding_equals_vision(self):
        """True when both tensors are bitwise identical."""
        if self.embedding is self.vision:
            return True
        if self.embedding.shape != self.vision.shape:
            return False
        return bool(
            np.array_equal(
                self.vision.view(np.uint32), self.embedding.view(np.uint32)
            )
        )

    def __eq__(self, other):
        if not isinstance(other, FrameGridPair):
            return NotImplemented
        return (
            self.vision.shape == other.vision.shape
            and self.embedding.shape == other.embedding.shape
            and np.array_equal(
                self.vision.view(np.uint32), other.vision.view(np.uint32)
            )
            and np.array_equal(
                self.embedding.view(np.uint32), other.embedding.view(np.uint32)
            )
        )

    def __repr__(self):
        t, h, w = self.grid_shape
        return (
            f"FrameGridPair(t={t}, h={h}, w={w}, "
            f"d_clip={self.d_clip}, d_emb={self.d_emb})"
        )


def save_grid(grid, path):
    """Write ``grid`` to ``path`` in DTG v1, bit-exact and re-loadable.

    When the embedding tensor is bitwise equal to the vision tensor the
    dedup flag is set and only one payload copy is written.
    """
    if not isinstance(grid, FrameGridPair):
        raise GridFormatError(f"expected FrameGridPair, got {type(grid).__name__}")
    t, h, w = grid.grid_shape
    flags = 0
    dedup = grid.embedding_equals_vision()
    if dedup:
        flags |= FLAG_EMBEDDING_EQUALS_VISION
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, flags, t, h, w, grid.d_clip, grid.d_emb
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(grid.vision.tobytes())
        if not dedup:
            fh.write(grid.embedding.tobytes())


def load_grid(path):
    """Read a DTG v1 file and return the validated FrameGridPair."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER_SIZE:
        raise GridFormatError(
            f"malformed header: file is {len(raw)} bytes, "
            f"header needs {HEADER_SIZE} (at byte offset 0)"
        )
    magic, version, flags, t, h, w, d_clip, d_emb = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise GridFormatError(
            f"malformed header: bad magic {magic!r} at byte offset 0, "
            f"expected {MAGIC!r}"
        )
    if version != FORMAT_VERSION:
        raise GridFormatError(
            f"malformed header: unsupported version {version} at byte offset 4"
        )
    if flags & ~FLAG_EMBEDDING_EQUALS_VISION:
        raise GridFormatError(
            f"malformed header: unknown flags {flags:#x} at byte offset 8"
        )
    dedup = bool(flags & FLAG_EMBEDDING_EQUALS_VISION)
    if min(t, h, w, d_clip, d_emb) < 1:
        raise GridFormatError(
            "malformed header: all of t, h, w, d_clip, d_emb must be >= 1, "
            f"got t={t} h={h} w={w} d_clip={d_clip} d_emb={d_emb} "
            "(at byte offsets 12..31)"
        )
    if dedup and d_emb != d_clip:
        raise GridFormatError(
            "malformed header: embedding-equals-vision flag set but "
            f"d_emb={d_emb} != d_clip={d_clip} (at byte offset 28)"
        )
    cells = t * h * w
    vision_bytes = cells * d_clip * 4
    embedding_bytes = 0 if dedup else cells * d_emb * 4
    expected = vision_bytes + embedding_bytes
    payload = len(raw) - HEADER_SIZE
    if payload != expected:
        raise GridFormatError(
            f"payload is {payload} bytes at byte offset {HEADER_SIZE}, "
            f"header declares {expected}"
        )

    def _tensor(offset, d, name):
        arr = np.frombuffer(raw, dtype="<f4", count=cells * d, offset=offset)
        arr = arr.reshape(t, h, w, d)
        bad = np.flatnonzero(~np.isfinite(arr.reshape(-1)))
        if bad.size:
            flat = int(bad[0])
            raise GridFormatError(
                f"non-finite value in {name} tensor at flat index {flat} "
                f"(byte offset {offset + flat * 4})"
            )
        return arr

    vision = _tensor(HEADER_SIZE, d_clip, "vision")
    if dedup:
        embedding = vision
    else:
        embedding = _tensor(HEADER_SIZE + vision_bytes, d_emb, "embedding")
    return FrameGridPair(vision, embedding)
