"""Command-line pipeline: simulate | refocus | reconstruct | train | evaluate.

Every command writes its outputs plus one ``manifest.json`` into ``--output``.
Exit status is 0 on success, 2 on invalid input or configuration, 1 otherwise.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

from . import __version__
from .events import FormatError, ValidationError, load_events, save_events
from .framing import load_frames, save_frames, voxelize
from .imageio import read_pgm, write_image
from .metrics import evaluate
from .network.checkpoint import load_checkpoint, save_checkpoint
from .network.lif import LifConfig
from .network.losses import LossConfig
from .network.model import DESK_DECODER, DESK_ENCODER, build_network
from .network.train import TrainConfig, train
from .reconstruction import reconstruct_acc, reconstruct_fsai, reconstruct_hybrid
from .refocus import RefocusParams, alignment_score, refocus_stream
from .simulator import (ground_truth, load_scene_config, read_keyvalue, simulate_events,
                        simulate_frames)


def _threads() -> int:
    raw = os.environ.get("ESAI_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"ESAI_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValidationError(f"ESAI_THREADS must be >= 1, got {n}")
    return n


def _write_manifest(out: Path, command: str, args, config: dict, inputs, outputs, seed, t0):
    manifest = {
        "command": command,
        "args": {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()
                 if k != "func"},
        "config": config,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "seed": seed,
        "version": __version__,
        "threads": _threads(),
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _outdir(args) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True)


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    cfg = load_scene_config(args.config)
    scene = cfg.scene
    if args.seed is not None:
        scene = replace(scene, seed=args.seed)
    out = _outdir(args)
    stream = simulate_events(scene, cfg.camera, cfg.trajectory, cfg.dt_sample)
    events_path, truth_path = out / "events.txt", out / "truth.pgm"
    save_events(stream, events_path)
    write_image(truth_path, ground_truth(scene, cfg.camera, cfg.trajectory))
    _write_manifest(out, "simulate", args, cfg.raw, [args.config], [events_path, truth_path],
                    scene.seed, t0)
    print(_json({"events": len(stream), "warnings": list(stream.warnings)}))
    return 0


def _depth(args, cfg) -> float:
    return float(args.depth) if args.depth is not None else cfg.scene.d


def cmd_refocus(args) -> int:
    t0 = time.perf_counter()
    cfg = load_scene_config(args.config)
    stream = load_events(args.input)
    params = RefocusParams(cfg.camera, cfg.trajectory, _depth(args, cfg))
    refocused, report = refocus_stream(stream, params)
    report["alignment_score"] = alignment_score(refocused) if len(refocused) else None
    out = _outdir(args)
    ev_path, fr_path = out / "refocused.txt", out / "frames.efrm"
    save_events(refocused, ev_path)
    traj = cfg.trajectory
    save_frames(voxelize(refocused, args.n, (traj.t_start, traj.t_end + 1)), fr_path)
    _write_manifest(out, "refocus", args, cfg.raw, [args.input, args.config], [ev_path, fr_path],
                    None, t0)
    print(_json(report))
    return 0


def cmd_reconstruct(args) -> int:
    t0 = time.perf_counter()
    out = _outdir(args)
    inputs, config = [], {}
    if args.method == "acc":
        _require(args, "input")
        rec = reconstruct_acc(load_events(args.input))
        inputs.append(args.input)
    elif args.method == "fsai":
        _require(args, "config")
        cfg = load_scene_config(args.config)
        views = simulate_frames(cfg.scene, cfg.camera, cfg.trajectory, args.views)
        rec = reconstruct_fsai(views, cfg.camera, _depth(args, cfg), cfg.trajectory.ref_center)
        inputs.append(args.config)
        config = cfg.raw
    else:
        _require(args, "input")
        _require(args, "checkpoint")
        net = load_checkpoint(args.checkpoint)
        src = Path(args.input)
        if src.suffix == ".efrm":
            seq = load_frames(src)
        else:
            _require(args, "config")
            cfg = load_scene_config(args.config)
            traj = cfg.trajectory
            seq = voxelize(load_events(src), args.n, (traj.t_start, traj.t_end + 1))
            config = cfg.raw
        rec = reconstruct_hybrid(seq, net)
        inputs += [args.input, args.checkpoint]
    img_path = out / f"recon_{args.method}.{args.format}"
    rep_path = out / "report.json"
    write_image(img_path, rec.image)
    rep_path.write_text(json.dumps({"method": rec.method, **rec.report}, indent=2,
                                   sort_keys=True) + "\n")
    _write_manifest(out, "reconstruct", args, config, inputs, [img_path, rep_path], None, t0)
    print(_json({"method": rec.method, "image": str(img_path)}))
    return 0


def _require(args, name):
    if getattr(args, name) is None:
        raise ValidationError(f"--{name} is required for this command")


def _train_dataset(root: Path):
    pairs = []
    for fr in sorted(root.rglob("*.efrm")):
        truth = fr.with_suffix(".pgm")
        if not truth.exists():
            truth = fr.parent / "truth.pgm"
        if not truth.exists():
            raise ValidationError(f"no ground-truth PGM found for {fr}")
        pairs.append((fr, truth))
    if not pairs:
        raise ValidationError(f"no .efrm frame files under {root}")
    return pairs


TRAIN_KEYS = {"lr": float, "epochs": int, "seed": int, "max_steps": int, "alpha": float,
              "u_th": float, "surrogate_width": float, "beta_per": float, "beta_pix": float,
              "beta_tv": float, "n": int, "encoder": str, "decoder": str, "skip_taps": str}


def _train_config(path) -> dict:
    if path is None:
        return {}
    raw = read_keyvalue(path)
    out = {}
    for k, v in raw.items():
        if k not in TRAIN_KEYS:
            raise ValidationError(f"{path}: unknown training key {k!r}")
        try:
            out[k] = TRAIN_KEYS[k](v)
        except ValueError:
            raise ValidationError(f"{path}: key {k!r}: cannot parse {v!r}") from None
    return out


def cmd_train(args) -> int:
    t0 = time.perf_counter()
    conf = _train_config(args.config)
    for key in ("epochs", "seed", "n"):
        if getattr(args, key) is not None:
            conf[key] = getattr(args, key)
    seed = conf.get("seed", 0)
    epochs = conf.get("epochs", 10)
    n = conf.get("n", 30)
    pairs = _train_dataset(Path(args.input))
    dataset = [(load_frames(fr), read_pgm(gt)) for fr, gt in pairs]
    for (fr, _), (seq, _) in zip(pairs, dataset):
        if seq.n != n:
            raise ValidationError(f"{fr} has {seq.n} intervals, training expects --n {n}")
    lif = LifConfig(conf.get("alpha", 0.8), conf.get("u_th", 0.5), 0.0,
                    conf.get("surrogate_width", 1.0))
    if args.checkpoint is not None:
        net = load_checkpoint(args.checkpoint)
    else:
        enc = conf["encoder"].split(",") if "encoder" in conf else DESK_ENCODER
        dec = conf["decoder"].split(",") if "decoder" in conf else DESK_DECODER
        taps = tuple(int(s) for s in conf["skip_taps"].split(",")) if "skip_taps" in conf else (0,)
        net = build_network(enc, dec, n_steps=n, lif=lif, skip_taps=taps, seed=seed)
    tcfg = TrainConfig(lr=conf.get("lr", 5e-4), epochs=epochs, seed=seed,
                       max_steps=conf.get("max_steps"))
    lcfg = LossConfig(conf.get("beta_per", 1.0), conf.get("beta_pix", 32.0),
                      conf.get("beta_tv", 2e-4))
    net, history = train(net, dataset, tcfg, lcfg)
    out = _outdir(args)
    ck_path, rep_path = out / "model.esai", out / "train_report.json"
    save_checkpoint(net, ck_path)
    report = {"config": {**tcfg.to_dict(), "n": n, "lif": asdict(net.lif), "betas": [lcfg.beta_per, lcfg.beta_pix, lcfg.beta_tv]},
              "loss_history": history, "seed": seed, "samples": len(dataset)}
    rep_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    _write_manifest(out, "train", args, conf, [p for pair in pairs for p in pair],
                    [ck_path, rep_path], seed, t0)
    print(_json({"epochs": len(history), "final_loss": history[-1] if history else None}))
    return 0


def cmd_evaluate(args) -> int:
    t0 = time.perf_counter()
    img = read_pgm(args.input)
    ref = read_pgm(args.reference) if args.reference is not None else None
    report = evaluate(img, ref).to_dict()
    out = Path(args.output) if args.output is not None else Path(args.input).parent
    out.mkdir(parents=True, exist_ok=True)
    met_path = out / "metrics.json"
    met_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    inputs = [args.input] + ([args.reference] if args.reference is not None else [])
    _write_manifest(out, "evaluate", args, {}, inputs, [met_path], None, t0)
    print(_json(report))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="esai", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"esai {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a labeled event stream from a scene config")
    p.add_argument("--config", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("refocus", help="refocus events onto the target depth and frame them")
    p.add_argument("--input", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--depth", type=float)
    p.add_argument("--n", type=int, default=30)
    p.set_defaults(func=cmd_refocus)

    p = sub.add_parser("reconstruct", help="reconstruct the occluded target")
    p.add_argument("--method", choices=("acc", "fsai", "hybrid"), required=True)
    p.add_argument("--input")
    p.add_argument("--config")
    p.add_argument("--checkpoint")
    p.add_argument("--output", required=True)
    p.add_argument("--depth", type=float)
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--views", type=int, default=35)
    p.add_argument("--format", choices=("pgm", "png"), default="pgm")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("train", help="train the hybrid network on framed samples")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--config")
    p.add_argument("--checkpoint")
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="image quality metrics as JSON")
    p.add_argument("--input", required=True)
    p.add_argument("--reference")
    p.add_argument("--output")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _threads()
        return args.func(args)
    except (ValidationError, FormatError, ValueError) as exc:
        print(f"esai {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"esai {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
