"""Equal-time event framing: N intervals x 2 polarity channels of integer counts."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .events import EventStream, FormatError

MAGIC = b"EFRM"


@dataclass(frozen=True, eq=False)
class FrameSequence:
    """Counts of shape (n, 2, height, width); channel 0 = positive, 1 = negative."""

    data: np.ndarray
    t_edges: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 4 or data.shape[1] != 2:
            raise ValueError(f"frame data must be (n, 2, H, W), got {data.shape}")
        if data.size and data.min() < 0:
            raise ValueError("frame counts must be non-negative")
        edges = np.asarray(self.t_edges, np.float64)
        if edges.shape != (data.shape[0] + 1,):
            raise ValueError("t_edges must hold n + 1 boundaries")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("t_edges must be strictly increasing")
        object.__setattr__(self, "data", data.astype(np.int64))
        object.__setattr__(self, "t_edges", edges)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[2]

    @property
    def width(self) -> int:
        return self.data.shape[3]

    def __eq__(self, other):
        if not isinstance(other, FrameSequence):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    __hash__ = None


def voxelize(stream: EventStream, n: int, span: tuple[float, float] | None = None) -> FrameSequence:
    """Split ``span`` into ``n`` equal intervals and count events per cell.

    The span defaults to [first t, last t + 1). Events at or past the end of
    the span fall into the last interval, events before it into the first.
    """
    if n < 1:
        raise ValueError(f"interval count must be >= 1, got {n}")
    if span is None:
        if len(stream) == 0:
            raise ValueError("cannot infer the time span of an empty stream; pass span")
        span = (int(stream.t[0]), int(stream.t[-1]) + 1)
    t0, t1 = span
    if not t1 > t0:
        raise ValueError(f"span end must exceed start, got {span}")
    # exact integer arithmetic when the span is integral
    if float(t0).is_integer() and float(t1).is_integer():
        idx = ((stream.t - int(t0)) * n) // (int(t1) - int(t0))
    else:
        idx = np.floor((stream.t - t0) * n / (t1 - t0)).astype(np.int64)
    idx = np.clip(idx, 0, n - 1)
    ch = (stream.p < 0).astype(np.int64)
    data = np.zeros((n, 2, stream.height, stream.width), np.int64)
    np.add.at(data, (idx, ch, stream.y, stream.x), 1)
    edges = t0 + (t1 - t0) * np.arange(n + 1) / n
    return FrameSequence(data, edges)


def collapse(seq: FrameSequence) -> np.ndarray:
    """Sum over intervals: a (2, H, W) count image."""
    return seq.data.sum(axis=0)


def normalize_frames(seq: FrameSequence, percentile: float = 99.0) -> np.ndarray:
    """Float network input: counts / percentile of the non-zero counts, clipped to [0, 1]."""
    data = seq.data.astype(np.float64)
    nz = data[data > 0]
    if nz.size == 0:
        return data
    scale = np.percentile(nz, percentile)
    return np.clip(data / scale, 0.0, 1.0)


def save_frames(seq: FrameSequence, path) -> None:
    """Binary layout: b"EFRM", u32 n, h, w, then n*2*h*w little-endian u32 counts."""
    if seq.data.size and seq.data.max() > 0xFFFFFFFF:
        raise ValueError("frame count exceeds u32 range")
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<III", seq.n, seq.height, seq.width))
        fh.write(seq.data.astype("<u4").tobytes())


def load_frames(path) -> FrameSequence:
    """Read an EFRM file. Interval boundaries are not stored, so t_edges are 0..n."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC or len(raw) < 16:
        raise FormatError(f"{path}: not an EFRM frame file")
    n, h, w = struct.unpack("<III", raw[4:16])
    body = raw[16:]
    if len(body) != 4 * n * 2 * h * w:
        raise FormatError(f"{path}: expected {n * 2 * h * w} counts, found {len(body) // 4}")
    data = np.frombuffer(body, "<u4").reshape(n, 2, h, w).astype(np.int64)
    return FrameSequence(data, np.arange(n + 1, dtype=np.float64))
