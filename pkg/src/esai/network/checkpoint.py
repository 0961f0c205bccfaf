"""Model checkpoints.

Layout (little-endian)::

    b"ESAI"  u32 version  u32 manifest_bytes  manifest (UTF-8 JSON)
    float32 parameter blocks, in HybridNetwork.named_params() order

The manifest holds the layer specs, LIF constants and the name/shape of every
parameter block.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..events import FormatError
from .lif import LifConfig
from .model import HybridNetwork, LayerSpec

MAGIC = b"ESAI"
VERSION = 1


def manifest(net: HybridNetwork) -> dict:
    return {
        "encoder": [s.to_dict() for s in net.encoder],
        "decoder": [s.to_dict() for s in net.decoder],
        "lif": {"alpha": net.lif.alpha, "u_th": net.lif.u_th, "u_rest": net.lif.u_rest,
                "surrogate_width": net.lif.surrogate_width},
        "n_steps": net.n_steps,
        "in_channels": net.in_channels,
        "skip_taps": list(net.skip_taps),
        "include_input": net.include_input,
        "params": [{"name": k, "shape": list(v.shape)} for k, v in net.named_params()],
    }


def save_checkpoint(net: HybridNetwork, path) -> None:
    meta = json.dumps(manifest(net), sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<II", VERSION, len(meta)) + meta)
        for _, arr in net.named_params():
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path) -> HybridNetwork:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise FormatError(f"{path}: not an ESAI checkpoint")
    version, mlen = struct.unpack("<II", raw[4:12])
    if version != VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    meta = json.loads(raw[12:12 + mlen].decode("utf-8"))
    body = raw[12 + mlen:]
    blocks, ofs = {}, 0
    for entry in meta["params"]:
        n = int(np.prod(entry["shape"], dtype=np.int64))
        if ofs + 4 * n > len(body):
            raise FormatError(f"{path}: truncated parameter block {entry['name']}")
        blocks[entry["name"]] = np.frombuffer(body, "<f4", n, ofs).astype(np.float64).reshape(
            entry["shape"])
        ofs += 4 * n
    if ofs != len(body):
        raise FormatError(f"{path}: {len(body) - ofs} trailing bytes")

    enc = [LayerSpec(**d) for d in meta["encoder"]]
    dec = [LayerSpec(**d) for d in meta["decoder"]]
    enc_w = [blocks[f"enc{l}.w"] for l in range(len(enc))]
    dec_p = []
    for l in range(len(dec)):
        prefix = f"dec{l}."
        dec_p.append({k[len(prefix):]: v for k, v in blocks.items() if k.startswith(prefix)})
    return HybridNetwork(enc, dec, enc_w, dec_p, LifConfig(**meta["lif"]), meta["n_steps"],
                         meta["in_channels"], tuple(meta["skip_taps"]), meta["include_input"])
