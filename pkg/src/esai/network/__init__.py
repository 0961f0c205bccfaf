"""Hybrid SNN-CNN reconstruction network, losses and training."""
from .checkpoint import load_checkpoint, save_checkpoint
from .lif import LifConfig, lif_step
from .losses import (FeatureNet, IdentityFeatureNet, LossConfig, perceptual_loss, pixel_loss,
                     total_loss, tv_loss)
from .model import (HybridNetwork, LayerSpec, backward, build_network, decoder_forward,
                    encoder_forward, forward, parse_layer)
from .train import Adam, TrainConfig, train

__all__ = [
    "Adam", "FeatureNet", "HybridNetwork", "IdentityFeatureNet", "LayerSpec", "LifConfig",
    "LossConfig", "TrainConfig", "backward", "build_network", "decoder_forward",
    "encoder_forward", "forward", "lif_step", "load_checkpoint", "parse_layer",
    "perceptual_loss", "pixel_loss", "save_checkpoint", "total_loss", "train", "tv_loss",
]
