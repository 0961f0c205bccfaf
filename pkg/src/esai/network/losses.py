"""Training losses: perceptual, pixel (L1), total variation, and their weighted sum.

Images are (C, H, W) arrays. Gradients are taken with respect to the first
argument ``y`` (the network output); ``y_hat`` is the ground truth.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ops import conv2d, conv2d_backward

DEFAULT_LAMBDAS = (1e-1, 1 / 21, 10 / 21, 10 / 21)
DEFAULT_BETAS = (1.0, 32.0, 2e-4)


class FeatureNet:
    """Fixed random strided conv stack (3x3, stride 2, ReLU) with a tap after each layer.

    Weights come from ``seed`` and are read-only; nothing ever updates them.
    """

    def __init__(self, channels=(8, 16, 16, 16), in_channels=1, seed=0):
        rng = np.random.default_rng(seed)
        self.weights = []
        c = in_channels
        for co in channels:
            w = rng.normal(0.0, np.sqrt(2.0 / (9 * c)), (co, c, 3, 3))
            w.flags.writeable = False
            self.weights.append(w)
            c = co

    @property
    def n_taps(self) -> int:
        return len(self.weights)

    def forward(self, y):
        taps, cache, h = [], [], y
        for w in self.weights:
            z = conv2d(h, w, None, 2, 1)
            cache.append((h, z))
            h = np.maximum(z, 0.0)
            taps.append(h)
        return taps, cache

    def backward(self, cache, dtaps):
        g = None
        for w, (x, z), dt in zip(self.weights[::-1], cache[::-1], dtaps[::-1]):
            g = dt if g is None else g + dt
            dz = g * (z > 0)
            g, _, _ = conv2d_backward(dz, x, w, 2, 1)
        return g


class IdentityFeatureNet:
    """Single tap that returns the image itself (for hand-checkable losses)."""

    n_taps = 1

    def forward(self, y):
        return [y], None

    def backward(self, cache, dtaps):
        return dtaps[0]


@dataclass
class LossConfig:
    beta_per: float = DEFAULT_BETAS[0]
    beta_pix: float = DEFAULT_BETAS[1]
    beta_tv: float = DEFAULT_BETAS[2]
    lambda_k: tuple[float, ...] = DEFAULT_LAMBDAS
    feature_net: object = field(default_factory=FeatureNet)

    def __post_init__(self):
        if min(self.beta_per, self.beta_pix, self.beta_tv) < 0:
            raise ValueError("loss weights must be non-negative")
        if len(self.lambda_k) != self.feature_net.n_taps:
            raise ValueError(
                f"{len(self.lambda_k)} tap weights for {self.feature_net.n_taps} feature taps")


def _check_pair(y, y_hat):
    y, y_hat = np.asarray(y, np.float64), np.asarray(y_hat, np.float64)
    if y.shape != y_hat.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {y_hat.shape}")
    return y, y_hat


def perceptual_loss(y, y_hat, cfg: LossConfig, grad: bool = False):
    """sum_k lambda_k / (C_k H_k W_k) * ||phi_k(y) - phi_k(y_hat)||^2."""
    y, y_hat = _check_pair(y, y_hat)
    fy, cache = cfg.feature_net.forward(y)
    fh, _ = cfg.feature_net.forward(y_hat)
    loss, dtaps = 0.0, []
    for lam, a, b in zip(cfg.lambda_k, fy, fh):
        diff = a - b
        loss += lam / diff.size * float(np.sum(diff * diff))
        dtaps.append(2.0 * lam / diff.size * diff)
    if not grad:
        return loss
    return loss, cfg.feature_net.backward(cache, dtaps)


def pixel_loss(y, y_hat, grad: bool = False):
    """Mean absolute difference ||y - y_hat||_1 / (C H W)."""
    y, y_hat = _check_pair(y, y_hat)
    diff = y - y_hat
    loss = float(np.abs(diff).sum() / diff.size)
    if not grad:
        return loss
    return loss, np.sign(diff) / diff.size


def tv_loss(y, grad: bool = False):
    """Anisotropic L1 total variation, averaged over all neighbor-difference terms."""
    y = np.asarray(y, np.float64)
    if y.ndim != 3:
        raise ValueError(f"expected a (C, H, W) image, got shape {y.shape}")
    dh = y[:, :, 1:] - y[:, :, :-1]
    dv = y[:, 1:, :] - y[:, :-1, :]
    count = dh.size + dv.size
    if count == 0:
        raise ValueError(f"image {y.shape} has no neighboring pixels")
    loss = float((np.abs(dh).sum() + np.abs(dv).sum()) / count)
    if not grad:
        return loss
    g = np.zeros_like(y)
    sh, sv = np.sign(dh) / count, np.sign(dv) / count
    g[:, :, 1:] += sh
    g[:, :, :-1] -= sh
    g[:, 1:, :] += sv
    g[:, :-1, :] -= sv
    return loss, g


def total_loss(y, y_hat, cfg: LossConfig, grad: bool = False):
    """beta_per * perceptual + beta_pix * pixel + beta_tv * tv."""
    y, y_hat = _check_pair(y, y_hat)
    terms = []
    if cfg.beta_per:
        terms.append((cfg.beta_per, perceptual_loss(y, y_hat, cfg, grad=grad)))
    if cfg.beta_pix:
        terms.append((cfg.beta_pix, pixel_loss(y, y_hat, grad=grad)))
    if cfg.beta_tv:
        terms.append((cfg.beta_tv, tv_loss(y, grad=grad)))
    if not grad:
        return float(sum(b * v for b, v in terms))
    loss = float(sum(b * v for b, (v, _) in terms))
    g = np.zeros_like(y)
    for b, (_, dg) in terms:
        g += b * dg
    return loss, g
