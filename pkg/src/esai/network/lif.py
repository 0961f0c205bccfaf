"""Leaky integrate-and-fire dynamics with hard reset and a rectangular surrogate."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LifConfig:
    alpha: float = 0.8
    u_th: float = 0.5
    u_rest: float = 0.0
    surrogate_width: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.u_th > 0:
            raise ValueError(f"u_th must be positive, got {self.u_th}")
        if self.u_rest != 0.0:
            raise ValueError("u_rest is fixed at 0")
        if not self.surrogate_width > 0:
            raise ValueError(f"surrogate_width must be positive, got {self.surrogate_width}")


def lif_step(u_prev, o_prev, current, cfg: LifConfig):
    """One membrane update: u = alpha * u_prev * (1 - o_prev) + current; fire where u > u_th."""
    u_prev, o_prev, current = (np.asarray(a, np.float64) for a in (u_prev, o_prev, current))
    if not (u_prev.shape == o_prev.shape == current.shape):
        raise ValueError(
            f"shape mismatch: u {u_prev.shape}, o {o_prev.shape}, current {current.shape}")
    u = cfg.alpha * u_prev * (1.0 - o_prev) + current
    return u, spike(u, cfg)


def spike(u, cfg: LifConfig, mode: str = "hard"):
    """Spike output for membrane ``u``.

    ``hard`` is the Heaviside step used at inference and training. ``ramp`` is
    the piecewise-linear function whose derivative equals the surrogate; it only
    exists so gradient checks have a differentiable reference model.
    """
    if mode == "hard":
        return (u > cfg.u_th).astype(np.float64)
    if mode == "ramp":
        a = cfg.surrogate_width
        return np.clip((u - cfg.u_th) / a + 0.5, 0.0, 1.0)
    raise ValueError(f"unknown spike mode {mode!r}")


def surrogate_grad(u, cfg: LifConfig):
    """Rectangular surrogate d(spike)/du = 1/a inside |u - u_th| < a/2."""
    a = cfg.surrogate_width
    return (np.abs(u - cfg.u_th) < a / 2).astype(np.float64) / a
