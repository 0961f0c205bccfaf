"""Target reconstruction: event accumulation, frame shift-and-average, hybrid network."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .events import EventStream
from .framing import FrameSequence, normalize_frames
from .geometry import CameraModel
from .network.model import HybridNetwork, decoder_forward, encoder_forward


@dataclass
class Reconstruction:
    image: np.ndarray
    method: str
    report: dict = field(default_factory=dict)

    def __post_init__(self):
        img = np.asarray(self.image, np.float64)
        if img.size and (img.min() < 0 or img.max() > 1):
            raise ValueError("reconstruction values must lie in [0, 1]")
        self.image = img


def reconstruct_acc(stream: EventStream) -> Reconstruction:
    """Signed per-pixel event count (positive minus negative), min-max scaled to [0, 1]."""
    if len(stream) == 0:
        raise ValueError("cannot accumulate an empty stream")
    counts = np.zeros((stream.height, stream.width), np.int64)
    np.add.at(counts, (stream.y, stream.x), stream.p.astype(np.int64))
    lo, hi = counts.min(), counts.max()
    if hi == lo:
        img = np.zeros(counts.shape)
    else:
        img = (counts - lo) / (hi - lo)
    report = {"events": len(stream), "positive": int((stream.p > 0).sum()),
              "negative": int((stream.p < 0).sum()), "count_min": int(lo), "count_max": int(hi),
              "normalization": "min-max of signed counts"}
    return Reconstruction(img, "ACC", report)


def reconstruct_fsai(views, cam: CameraModel, depth: float, ref_center) -> Reconstruction:
    """Shift every view onto the reference pose at ``depth`` and average.

    A view taken from center c is shifted by (fx, fy) * (c - ref_center) / depth
    pixels (rounded to nearest). Each output pixel averages only the views that
    cover it; uncovered pixels are 0 and counted in the report.
    """
    if len(views) < 2:
        raise ValueError(f"need at least 2 views, got {len(views)}")
    if depth <= 0:
        raise ValueError(f"depth must be positive, got {depth}")
    ref = np.asarray(ref_center, np.float64)
    h, w = cam.height, cam.width
    acc = np.zeros((h, w))
    hits = np.zeros((h, w), np.int64)
    for center, img in views:
        T = np.asarray(center, np.float64) - ref
        sx = int(np.floor(cam.fx * T[0] / depth + 0.5))
        sy = int(np.floor(cam.fy * T[1] / depth + 0.5))
        # output pixel (y, x) receives input pixel (y - sy, x - sx)
        ys, yd = max(0, -sy), max(0, sy)
        xs, xd = max(0, -sx), max(0, sx)
        nh, nw = h - abs(sy), w - abs(sx)
        if nh <= 0 or nw <= 0:
            continue
        acc[yd:yd + nh, xd:xd + nw] += np.asarray(img)[ys:ys + nh, xs:xs + nw]
        hits[yd:yd + nh, xd:xd + nw] += 1
    img = np.divide(acc, hits, out=np.zeros_like(acc), where=hits > 0)
    report = {"views": len(views), "depth": float(depth), "uncovered_pixels": int((hits == 0).sum()),
              "normalization": "clip to [0, 1]", "boundary": "average over covering views"}
    return Reconstruction(np.clip(img, 0.0, 1.0), "FSAI", report)


def reconstruct_hybrid(seq: FrameSequence, net: HybridNetwork) -> Reconstruction:
    """Encoder and decoder on normalized frames; output mapped from [-1, 1] to [0, 1]."""
    if seq.n != net.n_steps:
        raise ValueError(f"sequence has {seq.n} intervals, network expects {net.n_steps}")
    feats, trace = encoder_forward(normalize_frames(seq), net)
    y, _ = decoder_forward(feats, net)
    img = np.clip((y[0] + 1.0) / 2.0, 0.0, 1.0)
    rates = [float(o.mean()) for o in trace.o]
    report = {"n": seq.n, "events_framed": int(seq.data.sum()), "spike_rates": rates,
              "lif": {"alpha": net.lif.alpha, "u_th": net.lif.u_th,
                      "surrogate_width": net.lif.surrogate_width}}
    return Reconstruction(img, "HYBRID", report)
