"""Hybrid spiking-encoder / convolutional-decoder network.

The encoder is a stack of spiking convolutions unrolled over the N event
frames. Frame t drives the first layer at step t and every later layer is
driven by the spikes of the layer below at the same step. After N steps each
layer is summarized by its spike rate (spike count / N). The decoder gets the
time-averaged input frames, the rates of the tapped layers and the rate of the
last layer, concatenated along channels, and produces one image in [-1, 1].
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .lif import LifConfig, spike, surrogate_grad
from .ops import conv2d, conv2d_backward, conv_transpose2d, conv_transpose2d_backward

KINDS = ("spiking_conv", "conv", "residual", "deconv", "output")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    channels_out: int
    kernel: int = 3
    stride: int = 1
    padding: int | None = None
    activation: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.padding is None:
            object.__setattr__(self, "padding", self.kernel // 2)
        if self.activation is None:
            act = {"spiking_conv": None, "output": "tanh"}.get(self.kind, "relu")
            object.__setattr__(self, "activation", act)
        if self.activation not in (None, "relu", "tanh", "identity"):
            raise ValueError(f"unknown activation {self.activation!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "channels_out": self.channels_out, "kernel": self.kernel,
                "stride": self.stride, "padding": self.padding, "activation": self.activation}


_NOTATION = [
    (re.compile(r"Sconv(\d+)p(\d+)-(\d+)$"),
     lambda k, p, c: LayerSpec("spiking_conv", int(c), int(k), 1, int(p))),
    (re.compile(r"c(\d+)s(\d+)-(\d+)$"),
     lambda k, s, c: LayerSpec("conv", int(c), int(k), int(s), int(k) // 2)),
    (re.compile(r"r-(\d+)$"), lambda c: LayerSpec("residual", int(c), 3, 1, 1)),
    (re.compile(r"deconv-(\d+)$"), lambda c: LayerSpec("deconv", int(c), 3, 2, 1)),
]


def parse_layer(text: str, output: bool = False) -> LayerSpec:
    """Parse layer shorthand such as ``Sconv3p1-16``, ``c7s1-64``, ``r-256``, ``deconv-128``.

    With ``output=True`` a ``cKs1-C`` entry becomes the tanh output layer.
    """
    for pat, make in _NOTATION:
        m = pat.match(text.strip())
        if m:
            spec = make(*m.groups())
            if output:
                if spec.kind != "conv":
                    raise ValueError(f"output layer must be a cKsS-C convolution, got {text!r}")
                spec = LayerSpec("output", spec.channels_out, spec.kernel, spec.stride,
                                 spec.padding, "tanh")
            return spec
    raise ValueError(f"cannot parse layer notation {text!r}")


DESK_ENCODER = ("Sconv3p1-8", "Sconv1p0-8")
DESK_DECODER = ("c3s1-16", "r-16", "r-16", "c3s1-1")
FULL_ENCODER = ("Sconv3p1-16", "Sconv1p0-16", "Sconv1p0-32")
FULL_DECODER = ("c7s1-64", "c3s2-128", "c3s2-256") + ("r-256",) * 9 + (
    "deconv-128", "deconv-64", "c7s1-1")


@dataclass
class HybridNetwork:
    """Parameters and configuration of the hybrid model.

    ``enc_weights[l]`` has shape (C_out, C_in, k, k). ``dec_params[l]`` is a dict
    whose keys depend on the layer kind: conv/deconv use w, gamma, beta;
    residual uses w1, gamma1, beta1, w2, gamma2, beta2; output uses w, b.
    """

    encoder: list[LayerSpec]
    decoder: list[LayerSpec]
    enc_weights: list[np.ndarray]
    dec_params: list[dict]
    lif: LifConfig = field(default_factory=LifConfig)
    n_steps: int = 30
    in_channels: int = 2
    skip_taps: tuple[int, ...] = (0,)
    include_input: bool = True
    state: list | None = None

    @property
    def feature_channels(self) -> int:
        return feature_channels(self.encoder, self.in_channels, self.skip_taps, self.include_input)

    def named_params(self):
        """(name, array) pairs in a fixed order; arrays are the live parameters."""
        for l, w in enumerate(self.enc_weights):
            yield f"enc{l}.w", w
        for l, p in enumerate(self.dec_params):
            for k in sorted(p):
                yield f"dec{l}.{k}", p[k]

    def num_params(self) -> int:
        return sum(a.size for _, a in self.named_params())

    def copy(self) -> "HybridNetwork":
        return HybridNetwork(list(self.encoder), list(self.decoder),
                             [w.copy() for w in self.enc_weights],
                             [{k: v.copy() for k, v in p.items()} for p in self.dec_params],
                             self.lif, self.n_steps, self.in_channels, tuple(self.skip_taps),
                             self.include_input)

    def reset_state(self, height: int, width: int):
        """Zero membrane potentials and spikes before a new sample."""
        self.state = [(np.zeros((s.channels_out, height, width)),
                       np.zeros((s.channels_out, height, width))) for s in self.encoder]


def feature_channels(encoder, in_channels, skip_taps, include_input) -> int:
    taps = _tap_layers(len(encoder), skip_taps)
    return (in_channels if include_input else 0) + sum(encoder[l].channels_out for l in taps)


def _tap_layers(n_layers, skip_taps):
    taps = sorted(set(int(l) for l in skip_taps if 0 <= l < n_layers - 1))
    return taps + [n_layers - 1]


def build_network(encoder=DESK_ENCODER, decoder=DESK_DECODER, *, n_steps=30, lif=None,
                  in_channels=2, skip_taps=(0,), include_input=True, seed=0) -> HybridNetwork:
    """Create a network from layer specs or shorthand strings, He-initialized from ``seed``."""
    enc = [parse_layer(s) if isinstance(s, str) else s for s in encoder]
    dec = [parse_layer(s, output=(i == len(decoder) - 1)) if isinstance(s, str) else s
           for i, s in enumerate(decoder)]
    if not enc or any(s.kind != "spiking_conv" for s in enc):
        raise ValueError("encoder must be a non-empty list of spiking_conv layers")
    if any(s.kind == "spiking_conv" for s in dec):
        raise ValueError("spiking_conv layers are only allowed in the encoder")
    if not dec or dec[-1].kind != "output":
        raise ValueError("decoder must end with an output layer")
    if any(s.stride != 1 for s in enc):
        raise ValueError("spiking layers use stride 1")
    rng = np.random.default_rng(seed)

    def he(c_out, c_in, k):
        return rng.normal(0.0, np.sqrt(2.0 / (c_in * k * k)), (c_out, c_in, k, k))

    enc_w, c = [], in_channels
    for s in enc:
        enc_w.append(he(s.channels_out, c, s.kernel))
        c = s.channels_out
    c = feature_channels(enc, in_channels, skip_taps, include_input)
    dec_p = []
    for s in dec:
        co = s.channels_out
        if s.kind == "conv":
            dec_p.append({"w": he(co, c, s.kernel), "gamma": np.ones(co), "beta": np.zeros(co)})
        elif s.kind == "residual":
            if co != c:
                raise ValueError(f"residual block needs {c} channels, layer declares {co}")
            dec_p.append({"w1": he(co, c, s.kernel), "gamma1": np.ones(co), "beta1": np.zeros(co),
                          "w2": he(co, co, s.kernel) * 0.1, "gamma2": np.ones(co),
                          "beta2": np.zeros(co)})
        elif s.kind == "deconv":
            w = rng.normal(0.0, np.sqrt(2.0 / (c * s.kernel ** 2)), (c, co, s.kernel, s.kernel))
            dec_p.append({"w": w, "gamma": np.ones(co), "beta": np.zeros(co)})
        else:
            dec_p.append({"w": he(co, c, s.kernel) * 0.1, "b": np.zeros(co)})
        c = co
    return HybridNetwork(enc, dec, enc_w, dec_p, lif or LifConfig(), n_steps, in_channels,
                         tuple(skip_taps), include_input)


# ------------------------------------------------------------------ encoder

@dataclass
class EncoderTrace:
    """Everything the STBP backward pass needs from one forward run."""

    inputs: np.ndarray              # (N, C_in, H, W)
    u: list[np.ndarray]             # per layer (N, C, H, W) membrane potentials
    o: list[np.ndarray]             # per layer (N, C, H, W) spikes
    mode: str = "hard"


def encoder_forward(x, net: HybridNetwork, mode: str = "hard"):
    """Run the spiking encoder over all N frames; returns (features, trace).

    ``x`` is the normalized (N, C_in, H, W) input. Membrane state is reset to
    zero first and holds the final (u, o) per layer afterwards.
    """
    x = np.asarray(x, np.float64)
    if x.ndim != 4 or x.shape[1] != net.in_channels:
        raise ValueError(f"expected input (N, {net.in_channels}, H, W), got {x.shape}")
    n, _, h, w = x.shape
    if n != net.n_steps:
        raise ValueError(f"network is configured for {net.n_steps} steps, input has {n}")
    net.reset_state(h, w)
    cfg = net.lif
    us = [np.zeros((n, s.channels_out, h, w)) for s in net.encoder]
    os_ = [np.zeros((n, s.channels_out, h, w)) for s in net.encoder]
    for t in range(n):
        inp = x[t]
        for l, (s, wt) in enumerate(zip(net.encoder, net.enc_weights)):
            u_prev, o_prev = net.state[l]
            c = conv2d(inp, wt, None, 1, s.padding)
            u = cfg.alpha * u_prev * (1.0 - o_prev) + c
            o = spike(u, cfg, mode)
            net.state[l] = (u, o)
            us[l][t], os_[l][t] = u, o
            inp = o
    return _features(x, os_, net), EncoderTrace(x, us, os_, mode)


def _features(x, spikes, net):
    parts = [x.mean(axis=0)] if net.include_input else []
    parts += [spikes[l].mean(axis=0) for l in _tap_layers(len(net.encoder), net.skip_taps)]
    return np.concatenate(parts, axis=0)


def encoder_backward(net: HybridNetwork, trace: EncoderTrace, dfeat):
    """STBP gradients of the encoder weights given d(loss)/d(features).

    Gradients run backward through time inside each layer (leak and reset
    paths of the membrane update) and downward through the layers. The spike
    derivative is replaced by the rectangular surrogate.
    """
    if trace is None:
        raise RuntimeError("encoder_backward needs the trace of a completed forward pass")
    cfg = net.lif
    n = trace.inputs.shape[0]
    n_layers = len(net.encoder)
    taps = _tap_layers(n_layers, net.skip_taps)

    # split the feature gradient into per-layer rate gradients
    drate = [None] * n_layers
    ofs = net.in_channels if net.include_input else 0
    for l in taps:
        c = net.encoder[l].channels_out
        drate[l] = dfeat[ofs:ofs + c]
        ofs += c

    grads = [np.zeros_like(w) for w in net.enc_weights]
    d_from_above = None           # (N, C, H, W) gradient w.r.t. this layer's spikes
    for l in range(n_layers - 1, -1, -1):
        s, wt = net.encoder[l], net.enc_weights[l]
        u, o = trace.u[l], trace.o[l]
        inputs = trace.inputs if l == 0 else trace.o[l - 1]
        do = np.zeros_like(o) if d_from_above is None else d_from_above
        if drate[l] is not None:
            do = do + drate[l][None] / n
        d_below = np.zeros_like(inputs) if l > 0 else None
        du_next = np.zeros_like(u[0])
        for t in range(n - 1, -1, -1):
            # u(t+1) = alpha * u(t) * (1 - o(t)) + c(t+1)
            do_t = do[t] - cfg.alpha * u[t] * du_next
            du = do_t * surrogate_grad(u[t], cfg) + cfg.alpha * (1.0 - o[t]) * du_next
            dx, dw, _ = conv2d_backward(du, inputs[t], wt, 1, s.padding, need_dx=l > 0)
            grads[l] += dw
            if l > 0:
                d_below[t] = dx
            du_next = du
        d_from_above = d_below
    return grads


# ------------------------------------------------------------------ decoder

def _affine(z, g, b):
    return z * g[:, None, None] + b[:, None, None]


def _act(a, kind):
    if kind == "relu":
        return np.maximum(a, 0.0)
    if kind == "tanh":
        return np.tanh(a)
    return a


def _act_grad(a, y, kind):
    if kind == "relu":
        return (a > 0).astype(np.float64)
    if kind == "tanh":
        return 1.0 - y * y
    return np.ones_like(a)


def decoder_forward(features, net: HybridNetwork):
    """Run the convolutional decoder; returns (image (C, H, W) in [-1, 1], cache)."""
    h = np.asarray(features, np.float64)
    if h.shape[0] != net.feature_channels:
        raise ValueError(f"decoder expects {net.feature_channels} channels, got {h.shape[0]}")
    cache = []
    for s, p in zip(net.decoder, net.dec_params):
        x = h
        if s.kind == "conv":
            z = conv2d(x, p["w"], None, s.stride, s.padding)
            a = _affine(z, p["gamma"], p["beta"])
            h = _act(a, s.activation)
            cache.append((x, z, a, h))
        elif s.kind == "residual":
            z1 = conv2d(x, p["w1"], None, 1, s.padding)
            a1 = _affine(z1, p["gamma1"], p["beta1"])
            h1 = _act(a1, "relu")
            z2 = conv2d(h1, p["w2"], None, 1, s.padding)
            h = x + _affine(z2, p["gamma2"], p["beta2"])
            cache.append((x, z1, a1, h1, z2))
        elif s.kind == "deconv":
            z = conv_transpose2d(x, p["w"], None, s.stride, s.padding, s.stride - 1)
            a = _affine(z, p["gamma"], p["beta"])
            h = _act(a, s.activation)
            cache.append((x, z, a, h))
        else:
            a = conv2d(x, p["w"], p["b"], s.stride, s.padding)
            h = _act(a, s.activation)
            cache.append((x, a, h))
    return h, cache


def decoder_backward(net: HybridNetwork, cache, dy):
    """Exact reverse-mode gradients; returns (per-layer param grads, d features)."""
    grads = [None] * len(net.decoder)
    g = dy
    for l in range(len(net.decoder) - 1, -1, -1):
        s, p, c = net.decoder[l], net.dec_params[l], cache[l]
        if s.kind in ("conv", "deconv"):
            x, z, a, h = c
            da = g * _act_grad(a, h, s.activation)
            dgamma = (da * z).sum(axis=(1, 2))
            dbeta = da.sum(axis=(1, 2))
            dz = da * p["gamma"][:, None, None]
            if s.kind == "conv":
                dx, dw, _ = conv2d_backward(dz, x, p["w"], s.stride, s.padding)
            else:
                dx, dw, _ = conv_transpose2d_backward(dz, x, p["w"], s.stride, s.padding,
                                                      s.stride - 1)
            grads[l] = {"w": dw, "gamma": dgamma, "beta": dbeta}
        elif s.kind == "residual":
            x, z1, a1, h1, z2 = c
            dgamma2 = (g * z2).sum(axis=(1, 2))
            dbeta2 = g.sum(axis=(1, 2))
            dz2 = g * p["gamma2"][:, None, None]
            dh1, dw2, _ = conv2d_backward(dz2, h1, p["w2"], 1, s.padding)
            da1 = dh1 * (a1 > 0)
            dgamma1 = (da1 * z1).sum(axis=(1, 2))
            dbeta1 = da1.sum(axis=(1, 2))
            dz1 = da1 * p["gamma1"][:, None, None]
            dx, dw1, _ = conv2d_backward(dz1, x, p["w1"], 1, s.padding)
            dx = dx + g
            grads[l] = {"w1": dw1, "gamma1": dgamma1, "beta1": dbeta1,
                        "w2": dw2, "gamma2": dgamma2, "beta2": dbeta2}
        else:
            x, a, h = c
            da = g * _act_grad(a, h, s.activation)
            dx, dw, db = conv2d_backward(da, x, p["w"], s.stride, s.padding)
            grads[l] = {"w": dw, "b": db}
        g = dx
    return grads, g


# ------------------------------------------------------------------ full model

@dataclass
class ForwardTrace:
    encoder: EncoderTrace
    decoder: list
    features: np.ndarray


def forward(net: HybridNetwork, x, mode: str = "hard"):
    """Encoder then decoder; returns (image in [-1, 1], trace for ``backward``)."""
    feats, etrace = encoder_forward(x, net, mode)
    y, dcache = decoder_forward(feats, net)
    return y, ForwardTrace(etrace, dcache, feats)


def backward(net: HybridNetwork, trace: ForwardTrace | None, dy) -> dict:
    """Parameter gradients keyed like ``net.named_params()``."""
    if trace is None:
        raise RuntimeError("backward needs the trace of a completed forward pass")
    dec_grads, dfeat = decoder_backward(net, trace.decoder, dy)
    enc_grads = encoder_backward(net, trace.encoder, dfeat)
    out = {f"enc{l}.w": g for l, g in enumerate(enc_grads)}
    for l, gd in enumerate(dec_grads):
        for k, v in gd.items():
            out[f"dec{l}.{k}"] = v
    return out
