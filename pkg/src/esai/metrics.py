"""Image quality metrics: PSNR, single-scale SSIM, 2-D entropy and contrast (STD).

Images are 2-D float arrays in [0, 1]. Entropy and STD work on 8-bit levels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


def _pair(a, b):
    a, b = np.asarray(a, np.float64), np.asarray(b, np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB for peak 1.0; ``inf`` when the images match."""
    a, b = _pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2
    g = np.exp(-(r ** 2) / (2 * sigma ** 2))
    g /= g.sum()
    return np.outer(g, g)


def ssim(a, b) -> float:
    """Mean SSIM over all fully-contained 11x11 Gaussian windows (sigma 1.5)."""
    a, b = _pair(a, b)
    if a.ndim != 2 or min(a.shape) < SSIM_WINDOW:
        raise ValueError(f"SSIM needs a 2-D image at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {a.shape}")
    win = gaussian_window()

    def filt(x):
        return convolve2d(x, win, mode="valid")

    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a ** 2
    var_b = filt(b * b) - mu_b ** 2
    cov = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_a ** 2 + mu_b ** 2 + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(num / den))


def quantize8(a) -> np.ndarray:
    """[0, 1] -> integer levels 0..255 (round half up)."""
    return np.clip(np.floor(np.asarray(a, np.float64) * 255.0 + 0.5), 0, 255).astype(np.int64)


def entropy2d(a) -> float:
    """Shannon entropy (bits) of the joint histogram of (level, 3x3 mean level).

    Only interior pixels contribute, so every neighborhood is complete.
    """
    q = quantize8(a)
    if q.ndim != 2 or min(q.shape) < 3:
        raise ValueError(f"entropy2d needs a 2-D image at least 3x3, got {q.shape}")
    h, w = q.shape
    box = sum(q[i:h - 2 + i, j:w - 2 + j] for i in range(3) for j in range(3))
    mean = (box * 2 + 9) // 18          # round(box / 9), half up, in integers
    centre = q[1:-1, 1:-1]
    joint = np.bincount((centre * 256 + mean).ravel(), minlength=256 * 256)
    p = joint[joint > 0] / joint.sum()
    return float(-(p * np.log2(p)).sum()) + 0.0


def std(a) -> float:
    """Population standard deviation of the 8-bit levels."""
    q = quantize8(a)
    if q.size == 0:
        raise ValueError("std of an empty image")
    return float(q.std())


@dataclass
class MetricReport:
    entropy2d: float
    std: float
    psnr: float | None = None
    ssim: float | None = None

    def to_dict(self) -> dict:
        out = {}
        if self.psnr is not None:
            out["psnr"] = "inf" if math.isinf(self.psnr) else self.psnr
        if self.ssim is not None:
            out["ssim"] = self.ssim
            out["ssim_variant"] = "single-scale"
        out["entropy2d"] = self.entropy2d
        out["std"] = self.std
        return out


def evaluate(image, reference=None) -> MetricReport:
    """All four metrics with a reference image, entropy and STD only without one."""
    rep = MetricReport(entropy2d=entropy2d(image), std=std(image))
    if reference is not None:
        rep.psnr = psnr(image, reference)
        rep.ssim = ssim(image, reference)
    return rep
