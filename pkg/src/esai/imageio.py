"""8-bit grayscale image files: PGM (P2/P5) read/write and a minimal PNG writer."""
from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .events import FormatError


def _pgm_tokens(data: bytes, count: int, start: int = 0):
    """Read ``count`` whitespace-separated header tokens, skipping # comments."""
    tokens, i = [], start
    while len(tokens) < count:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace():
            j += 1
        if j == i:
            raise FormatError("truncated PGM header")
        tokens.append(data[i:j])
        i = j
    return tokens, i


def read_pgm(path) -> np.ndarray:
    """Load an 8-bit PGM as float64 in [0, 1] (value / 255)."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"{path}: not a PGM file (magic {magic!r})")
    (w, h, maxval), pos = _pgm_tokens(data, 3, 2)
    w, h, maxval = int(w), int(h), int(maxval)
    if maxval != 255:
        raise FormatError(f"{path}: only 8-bit PGM (maxval 255) is supported, got {maxval}")
    if magic == b"P5":
        raw = data[pos + 1:pos + 1 + w * h]
        if len(raw) != w * h:
            raise FormatError(f"{path}: expected {w * h} pixel bytes, found {len(raw)}")
        img = np.frombuffer(raw, np.uint8).reshape(h, w)
    else:
        vals = data[pos:].split()
        if len(vals) != w * h:
            raise FormatError(f"{path}: expected {w * h} pixel values, found {len(vals)}")
        img = np.array([int(v) for v in vals], np.int64).reshape(h, w)
        if img.min(initial=0) < 0 or img.max(initial=0) > 255:
            raise FormatError(f"{path}: pixel value outside 0..255")
    return img.astype(np.float64) / 255.0


def to_uint8(img) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    return np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)


def write_pgm(path, img) -> None:
    """Write a [0, 1] image as binary PGM (P5), value = round(v * 255)."""
    q = to_uint8(img)
    if q.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {q.shape}")
    h, w = q.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(q.tobytes())


def write_png(path, img) -> None:
    """Write a [0, 1] image as an 8-bit grayscale PNG."""
    q = to_uint8(img)
    h, w = q.shape
    raw = b"".join(b"\x00" + q[r].tobytes() for r in range(h))

    def chunk(kind, payload):
        body = kind + payload
        return struct.pack(">I", len(payload)) + body + struct.pack(">I", zlib.crc32(body))

    png = (b"\x89PNG\r\n\x1a\n"
           + chunk(b"IHDR", struct.pack(">IIBBBBB", w, h, 8, 0, 0, 0, 0))
           + chunk(b"IDAT", zlib.compress(raw, 9))
           + chunk(b"IEND", b""))
    Path(path).write_bytes(png)


def write_image(path, img) -> None:
    if str(path).lower().endswith(".png"):
        write_png(path, img)
    else:
        write_pgm(path, img)
