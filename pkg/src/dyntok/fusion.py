"""Group fusion into a compressed token sequence with row markers.

Embedding-space tokens inside each group are averaged (unweighted, with
float64 accumulation) into one fused token. After the last group of each
row a symbolic row marker is appended so the row structure survives the
variable-length compression; rows and frames then concatenate in raster
order. The marker is a sequence element, not a vector: exporters map it
to a reserved sentinel and it never contributes a float payload.

DTC format v1 for serialized sequences (all integers little-endian):

    offset  size  field
    0       4     magic ``DTCS``
    4       4     u32 version, must be 1
    8       4     u32 t   (source frames)
    12      4     u32 h   (source patch rows)
    16      4     u32 w   (source patch cols)
    20      4     u32 d_emb
    24      4     u32 l   (fused token count)
    28      ...   fused payload: (l, d_emb) float32, row-major
    ...     16*l  provenance table: l records of u32 (frame, row,
                  start col, end col exclusive), sequence order
    ...     4*t*h marker table: per row in raster order, u32 count of
                  fused tokens preceding that row's marker
"""

import struct
from dataclasses import dataclass

import numpy as np

from .grids import FrameGridPair
from .grouping import GroupMap, identity_groups

SEQ_MAGIC = b"DTCS"
SEQ_FORMAT_VERSION = 1
_SEQ_HEADER = struct.Struct("<4s6I")


class SequenceFormatError(ValueError):
    """A DTC file or sequence violates the format contract."""


@dataclass(frozen=True)
class Fused:
    """One fused token and the patch span it came from (end exclusive)."""

    vector: np.ndarray
    frame: int
    row: int
    start: int
    end: int


@dataclass(frozen=True)
class RowMarker:
    """Row-end sentinel carrying no payload."""

    frame: int
    row: int


@dataclass(frozen=True)
class CompressedSequence:
    """Fused tokens in raster order plus implied per-row markers.

    ``fused`` is (l, d_emb) float32; ``provenance`` is (l, 4) int32 rows
    of (frame, row, start col, end col exclusive). Markers are stored
    implicitly: exactly one terminates each of the t*h rows, so the
    sequence length is l + t*h.
    """

    fused: np.ndarray
    provenance: np.ndarray
    source_shape: tuple

    def __post_init__(self):
        shape = tuple(int(v) for v in self.source_shape)
        if len(shape) != 3 or min(shape) < 1:
            raise SequenceFormatError(
                f"source_shape must be three positive ints, got {self.source_shape}"
            )
        t, h, w = shape
        fused, provenance = self.fused, self.provenance
        if fused.ndim != 2 or fused.dtype != np.float32:
            raise SequenceFormatError("fused must be a (l, d_emb) float32 array")
        if (
            provenance.ndim != 2
            or provenance.shape != (fused.shape[0], 4)
            or provenance.dtype != np.int32
        ):
            raise SequenceFormatError("provenance must be a (l, 4) int32 array")
        if not t * h <= fused.shape[0] <= t * h * w:
            raise SequenceFormatError(
                f"fused count {fused.shape[0]} outside [t*h, t*h*w] for {shape}"
            )
        for name in ("fused", "provenance"):
            view = getattr(self, name).view()
            view.flags.writeable = False
            object.__setattr__(self, name, view)
        object.__setattr__(self, "source_shape", shape)

    @property
    def d_emb(self):
        return self.fused.shape[1]

    @property
    def fused_count(self):
        return self.fused.shape[0]

    @property
    def marker_count(self):
        t, h, _ = self.source_shape
        return t * h

    def __len__(self):
        return self.fused_count + self.marker_count

    def groups_per_row(self):
        """(t, h) int64 tensor of fused-token counts per row."""
        t, h, _ = self.source_shape
        rows = self.provenance[:, 0].astype(np.int64) * h + self.provenance[:, 1]
        counts = np.bincount(rows, minlength=t * h)
        return counts.reshape(t, h)

    def marker_offsets(self):
        """Fused tokens preceding each row marker, raster order, (t*h,).

        Marker r of the interleaved sequence sits after marker_offsets[r]
        fused tokens and r earlier markers. For the identity partition the
        offsets are w, 2w, 3w, ...
        """
        return np.cumsum(self.groups_per_row().reshape(-1))

    def entries(self):
        """Yield Fused and RowMarker entries in sequence order."""
        t, h, _ = self.source_shape
        k = 0
        for i in range(t):
            for j in range(h):
                while k < self.fused_count and (
                    self.provenance[k, 0] == i and self.provenance[k, 1] == j
                ):
                    frame, row, start, end = (int(v) for v in self.provenance[k])
                    yield Fused(self.fused[k], frame, row, start, end)
                    k += 1
                yield RowMarker(i, j)


def fuse(grid, gmap):
    """Average each group's embedding vectors into one token per group.

    Reads ``grid.embedding`` only; the map must have been built for the
    same (t, h, w). Means accumulate in float64 and round once to
    float32, so a group of identical vectors fuses to exactly that
    vector and singleton groups pass through bitwise.
    """
    if not isinstance(grid, FrameGridPair):
        raise TypeError(f"expected FrameGridPair, got {type(grid).__name__}")
    if not isinstance(gmap, GroupMap):
        raise TypeError(f"expected GroupMap, got {type(gmap).__name__}")
    t, h, w = grid.grid_shape
    if gmap.shape != (t, h, w):
        raise SequenceFormatError(
            f"group map shape {gmap.shape} does not match grid (t, h, w) {(t, h, w)}"
        )
    d = grid.d_emb
    flat = grid.embedding.reshape(t * h * w, d).astype(np.float64)
    starts = np.flatnonzero(gmap.start_mask.reshape(-1))
    counts = np.diff(starts, append=t * h * w)
    sums = np.add.reduceat(flat, starts, axis=0)
    fused = (sums / counts[:, None]).astype(np.float32)
    provenance = np.empty((starts.size, 4), dtype=np.int32)
    provenance[:, 0] = starts // (h * w)
    provenance[:, 1] = (starts // w) % h
    provenance[:, 2] = starts % w
    provenance[:, 3] = provenance[:, 2] + counts
    return CompressedSequence(fused, provenance, (t, h, w))


def flatten_baseline(grid):
    """Uncompressed baseline: identity partition plus one marker per row.

    Equals ``fuse`` under the identity GroupMap, giving t*(h*w + h)
    sequence entries.
    """
    t, h, w = grid.grid_shape
    return fuse(grid, identity_groups(t, h, w))


def sequence_summary(seq):
    """Counts-only summary used by the analysis JSON surface."""
    t, h, w = seq.source_shape
    return {
        "t": t,
        "h": h,
        "w": w,
        "fused": seq.fused_count,
        "markers": seq.marker_count,
        "length": len(seq),
    }


def save_sequence(seq, path):
    """Write ``seq`` to ``path`` in DTC v1, bit-exact and re-loadable."""
    t, h, w = seq.source_shape
    header = _SEQ_HEADER.pack(
        SEQ_MAGIC, SEQ_FORMAT_VERSION, t, h, w, seq.d_emb, seq.fused_count
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(seq.fused.tobytes())
        fh.write(seq.provenance.astype("<u4").tobytes())
        fh.write(seq.marker_offsets().astype("<u4").tobytes())


def load_sequence(path):
    """Read a DTC v1 file back into a CompressedSequence."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _SEQ_HEADER.size:
        raise SequenceFormatError(
            f"malformed header: file is {len(raw)} bytes, "
            f"header needs {_SEQ_HEADER.size}"
        )
    magic, version, t, h, w, d_emb, l = _SEQ_HEADER.unpack_from(raw, 0)
    if magic != SEQ_MAGIC:
        raise SequenceFormatError(
            f"malformed header: bad magic {magic!r} at byte offset 0"
        )
    if version != SEQ_FORMAT_VERSION:
        raise SequenceFormatError(
            f"malformed header: unsupported version {version} at byte offset 4"
        )
    if min(t, h, w, d_emb) < 1 or not (t * h <= l <= t * h * w):
        raise SequenceFormatError(
            f"malformed header: inconsistent sizes t={t} h={h} w={w} "
            f"d_emb={d_emb} l={l}"
        )
    expected = _SEQ_HEADER.size + l * d_emb * 4 + l * 16 + t * h * 4
    if len(raw) != expected:
        raise SequenceFormatError(
            f"file is {len(raw)} bytes, header declares {expected}"
        )
    off = _SEQ_HEADER.size
    fused = np.frombuffer(raw, dtype="<f4", count=l * d_emb, offset=off)
    fused = fused.reshape(l, d_emb)
    if not np.isfinite(fused).all():
        flat = int(np.flatnonzero(~np.isfinite(fused.reshape(-1)))[0])
        raise SequenceFormatError(
            f"non-finite value in fused payload at flat index {flat} "
            f"(byte offset {off + flat * 4})"
        )
    off += l * d_emb * 4
    provenance = np.frombuffer(raw, dtype="<u4", count=l * 4, offset=off)
    provenance = provenance.reshape(l, 4).astype(np.int32)
    off += l * 16
    offsets = np.frombuffer(raw, dtype="<u4", count=t * h, offset=off)
    _validate_provenance(provenance, t, h, w)
    seq = CompressedSequence(fused, provenance, (t, h, w))
    if not np.array_equal(seq.marker_offsets(), offsets.astype(np.int64)):
        raise SequenceFormatError(
            "marker table does not match the provenance table"
        )
    return seq


def _validate_provenance(provenance, t, h, w):
    """Spans must tile every row [0, w) in raster order."""
    f, r, s, e = (provenance[:, k].astype(np.int64) for k in range(4))
    if f.min() < 0 or f.max() >= t or r.min() < 0 or r.max() >= h:
        raise SequenceFormatError("provenance frame/row index out of range")
    if np.any(s < 0) or np.any(e <= s) or np.any(e > w):
        raise SequenceFormatError("provenance span outside [0, w) or empty")
    key = f * h + r
    if np.any(np.diff(key) < 0):
        raise SequenceFormatError("provenance table not in raster order")
    first = np.r_[True, key[1:] != key[:-1]]
    last = np.r_[key[1:] != key[:-1], True]
    if np.any(s[first] != 0) or np.any(e[last] != w):
        raise SequenceFormatError("provenance spans do not cover each row")
    inner = ~first
    if np.any(s[inner] != e[np.flatnonzero(inner) - 1]):
        raise SequenceFormatError("provenance spans are not contiguous")
    if np.unique(key).size != t * h:
        raise SequenceFormatError("provenance table is missing rows")
