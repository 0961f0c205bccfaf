"""Single-sample 2-D convolution primitives with hand-written backward passes.

Tensors are (C, H, W) float64. Weights are (C_out, C_in, k, k) for conv2d
and (C_in, C_out, k, k) for conv_transpose2d. Each kernel tap is handled as
one channel-mixing matmul over a strided view, which keeps the code short
and fast enough for desk-scale images.
"""
from __future__ import annotations

import numpy as np


def _out_size(n, k, stride, pad):
    return (n + 2 * pad - k) // stride + 1


def conv2d(x, w, b=None, stride=1, pad=0):
    c_in, h, wd = x.shape
    c_out, c_in_w, k, _ = w.shape
    if c_in != c_in_w:
        raise ValueError(f"conv2d expects {c_in_w} input channels, got {c_in}")
    ho, wo = _out_size(h, k, stride, pad), _out_size(wd, k, stride, pad)
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad))) if pad else x
    out = np.zeros((c_out, ho, wo))
    for i in range(k):
        for j in range(k):
            patch = xp[:, i:i + stride * ho:stride, j:j + stride * wo:stride]
            out += np.tensordot(w[:, :, i, j], patch, axes=(1, 0))
    if b is not None:
        out += b[:, None, None]
    return out


def conv2d_backward(dout, x, w, stride=1, pad=0, need_dx=True):
    """Gradients (dx, dw, db) of conv2d given the upstream gradient ``dout``."""
    c_in, h, wd = x.shape
    k = w.shape[2]
    _, ho, wo = dout.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad))) if pad else x
    dw = np.zeros_like(w)
    dxp = np.zeros_like(xp) if need_dx else None
    for i in range(k):
        for j in range(k):
            sl = (slice(None), slice(i, i + stride * ho, stride), slice(j, j + stride * wo, stride))
            dw[:, :, i, j] = np.tensordot(dout, xp[sl], axes=([1, 2], [1, 2]))
            if need_dx:
                dxp[sl] += np.tensordot(w[:, :, i, j], dout, axes=(0, 0))
    db = dout.sum(axis=(1, 2))
    dx = None
    if need_dx:
        dx = dxp[:, pad:pad + h, pad:pad + wd] if pad else dxp
    return dx, dw, db


def conv_transpose2d(x, w, b=None, stride=2, pad=1, out_pad=1):
    """Fractionally strided convolution; output size (H-1)*s - 2p + k + out_pad."""
    c_in, h, wd = x.shape
    c_in_w, c_out, k, _ = w.shape
    if c_in != c_in_w:
        raise ValueError(f"conv_transpose2d expects {c_in_w} input channels, got {c_in}")
    full_h, full_w = (h - 1) * stride + k + out_pad, (wd - 1) * stride + k + out_pad
    full = np.zeros((c_out, full_h, full_w))
    for i in range(k):
        for j in range(k):
            full[:, i:i + stride * h:stride, j:j + stride * wd:stride] += \
                np.tensordot(w[:, :, i, j], x, axes=(0, 0))
    out = full[:, pad:full_h - pad, pad:full_w - pad]
    if b is not None:
        out = out + b[:, None, None]
    return np.ascontiguousarray(out)


def conv_transpose2d_backward(dout, x, w, stride=2, pad=1, out_pad=1):
    c_in, h, wd = x.shape
    k = w.shape[2]
    c_out = w.shape[1]
    full_h, full_w = (h - 1) * stride + k + out_pad, (wd - 1) * stride + k + out_pad
    dfull = np.zeros((c_out, full_h, full_w))
    dfull[:, pad:full_h - pad, pad:full_w - pad] = dout
    dx = np.zeros_like(x)
    dw = np.zeros_like(w)
    for i in range(k):
        for j in range(k):
            g = dfull[:, i:i + stride * h:stride, j:j + stride * wd:stride]
            dx += np.tensordot(w[:, :, i, j], g, axes=(1, 0))
            dw[:, :, i, j] = np.tensordot(x, g, axes=([1, 2], [1, 2]))
    return dx, dw, dout.sum(axis=(1, 2))
