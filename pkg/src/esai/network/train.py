"""Adam training loop with step-decay learning rate (batch size 1)."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from ..framing import FrameSequence, normalize_frames
from .losses import LossConfig, total_loss
from .model import HybridNetwork, backward, forward

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    lr: float = 5e-4
    epochs: int = 10
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    decay: float = 0.5
    max_steps: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = dict(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in self.params.items()}
        self.v = {k: np.zeros_like(v) for k, v in self.params.items()}
        self.t = 0

    def step(self, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1, c2 = 1 - b1 ** self.t, 1 - b2 ** self.t
        for k, p in self.params.items():
            g = grads[k]
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            p -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def lr_at_epoch(cfg: TrainConfig, epoch: int) -> float:
    """Initial rate multiplied by ``decay`` every max(1, epochs // 2) epochs."""
    period = max(1, cfg.epochs // 2)
    return cfg.lr * cfg.decay ** (epoch // period)


def prepare_sample(seq: FrameSequence, image) -> tuple[np.ndarray, np.ndarray]:
    """Network-ready (input frames, target in [-1, 1] with a channel axis)."""
    img = np.asarray(image, np.float64)
    if img.ndim == 2:
        img = img[None]
    return normalize_frames(seq), 2.0 * img - 1.0


def train(net: HybridNetwork, dataset, cfg: TrainConfig | None = None,
          loss_cfg: LossConfig | None = None):
    """Train ``net`` in place on (FrameSequence, ground-truth image) pairs.

    Returns (net, per-epoch mean loss list). Shuffling uses ``cfg.seed`` only,
    so identical inputs give identical histories.
    """
    cfg = cfg or TrainConfig()
    loss_cfg = loss_cfg or LossConfig()
    if len(dataset) == 0:
        raise ValueError("training needs at least one sample")
    samples = [prepare_sample(seq, img) for seq, img in dataset]
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(net.named_params(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    history, steps = [], 0
    for epoch in range(cfg.epochs):
        opt.lr = lr_at_epoch(cfg, epoch)
        losses = []
        for i in rng.permutation(len(samples)).tolist():
            if cfg.max_steps is not None and steps >= cfg.max_steps:
                break
            x, target = samples[i]
            y, trace = forward(net, x)
            loss, dy = total_loss(y, target, loss_cfg, grad=True)
            opt.step(backward(net, trace, dy))
            losses.append(loss)
            steps += 1
        if not losses:
            break
        history.append(float(np.mean(losses)))
        logger.info("epoch %d lr %.2e loss %.5f", epoch, opt.lr, history[-1])
    return net, history


def evaluate_loss(net: HybridNetwork, dataset, loss_cfg: LossConfig | None = None) -> float:
    loss_cfg = loss_cfg or LossConfig()
    vals = []
    for seq, img in dataset:
        x, target = prepare_sample(seq, img)
        y, _ = forward(net, x)
        vals.append(total_loss(y, target, loss_cfg))
    return float(np.mean(vals))
