import numpy as np
import pytest

from esai.network import (FeatureNet, IdentityFeatureNet, LossConfig, perceptual_loss,
                          pixel_loss, total_loss, tv_loss)
from esai.network.losses import DEFAULT_BETAS, DEFAULT_LAMBDAS


def identity_cfg(**kw):
    return LossConfig(lambda_k=(1.0,), feature_net=IdentityFeatureNet(), **kw)


Y = np.array([[[0.1, 0.4], [0.9, -0.2]]])
Y_HAT = np.array([[[0.0, 0.5], [0.5, 0.0]]])


def test_default_weights():
    assert DEFAULT_BETAS == (1.0, 32.0, 2e-4)
    cfg = LossConfig()
    assert (cfg.beta_per, cfg.beta_pix, cfg.beta_tv) == (1.0, 32.0, 2e-4)
    assert sum(DEFAULT_LAMBDAS) == pytest.approx(1.1)


def test_perceptual_hand_value():
    y = np.full((1, 2, 2), 0.6)
    assert perceptual_loss(y, y - 0.1, identity_cfg()) == pytest.approx(0.01, abs=1e-15)
    assert perceptual_loss(y, y, LossConfig()) == 0.0


def test_perceptual_linear_in_lambda():
    rng = np.random.default_rng(0)
    a, b = rng.random((2, 1, 16, 16))
    base = perceptual_loss(a, b, LossConfig())
    doubled = perceptual_loss(a, b, LossConfig(lambda_k=tuple(2 * l for l in DEFAULT_LAMBDAS)))
    assert doubled == pytest.approx(2 * base, rel=1e-12)
    assert base > 0


def test_pixel_hand_values():
    a = np.zeros((1, 2, 2))
    assert abs(pixel_loss(a, a + 0.5) - 0.5) <= 1e-12
    assert pixel_loss(a, a) == 0.0
    assert pixel_loss(Y, Y_HAT) == pixel_loss(Y_HAT, Y)


def test_tv_hand_values():
    assert abs(tv_loss(np.array([[[0.0, 1.0]]])) - 1.0) <= 1e-12
    assert tv_loss(np.full((1, 3, 3), 0.7)) == 0.0
    assert abs(tv_loss(Y) - 0.7) <= 1e-12
    assert tv_loss(Y + 5.0) == pytest.approx(tv_loss(Y), abs=1e-12)
    with pytest.raises(ValueError):
        tv_loss(np.zeros((1, 1, 1)))


def test_total_hand_value():
    # diff = [0.1, -0.1, 0.4, -0.2]: perceptual 0.22 / 4, pixel 0.8 / 4, tv 2.8 / 4
    expected = 1.0 * 0.055 + 32.0 * 0.2 + 2e-4 * 0.7
    assert abs(total_loss(Y, Y_HAT, identity_cfg()) - expected) <= 1e-12
    assert total_loss(Y, Y_HAT, identity_cfg(beta_per=0, beta_pix=0, beta_tv=0)) == 0.0
    only_pix = identity_cfg(beta_per=0, beta_pix=1, beta_tv=0)
    assert total_loss(Y, Y_HAT, only_pix) == pixel_loss(Y, Y_HAT)


def test_shape_mismatch_and_config_errors():
    with pytest.raises(ValueError):
        pixel_loss(np.zeros((1, 2, 2)), np.zeros((1, 2, 3)))
    with pytest.raises(ValueError):
        perceptual_loss(np.zeros((1, 2, 2)), np.zeros((1, 3, 2)), identity_cfg())
    with pytest.raises(ValueError):
        LossConfig(beta_tv=-1)
    with pytest.raises(ValueError):
        LossConfig(lambda_k=(1.0,))


def test_feature_net_is_fixed():
    net = FeatureNet()
    assert [w.shape[0] for w in net.weights] == [8, 16, 16, 16]
    with pytest.raises(ValueError):
        net.weights[0][0, 0, 0, 0] = 1.0
    taps, _ = net.forward(np.zeros((1, 16, 16)))
    assert [t.shape[1] for t in taps] == [8, 4, 2, 1]


@pytest.mark.parametrize("fn", ["perceptual", "pixel", "tv", "total"])
def test_loss_gradients(fn):
    rng = np.random.default_rng(5)
    y = rng.normal(size=(1, 8, 8))
    y_hat = rng.normal(size=(1, 8, 8))
    cfg = LossConfig()
    f = {"perceptual": lambda v, g=False: perceptual_loss(v, y_hat, cfg, grad=g),
         "pixel": lambda v, g=False: pixel_loss(v, y_hat, grad=g),
         "tv": lambda v, g=False: tv_loss(v, grad=g),
         "total": lambda v, g=False: total_loss(v, y_hat, cfg, grad=g)}[fn]
    _, dy = f(y, True)
    h = 1e-6
    num = np.zeros_like(y)
    for idx in np.ndindex(y.shape):
        old = y[idx]
        y[idx] = old + h
        up = f(y)
        y[idx] = old - h
        down = f(y)
        y[idx] = old
        num[idx] = (up - down) / (2 * h)
    np.testing.assert_allclose(dy, num, rtol=1e-5, atol=1e-8)
