"""Write the small slat-occluded demo scene used by the CLI examples and tests.

The scene is a 32x32 sensor looking through vertical slats at a random
piecewise-constant target. Running this again overwrites
``demos/data/demo_scene`` with identical files.

    python demos/make_demo_scene.py
"""
from pathlib import Path

import numpy as np

from esai.imageio import write_pgm
from esai.scenes import random_target, slat_scene

OUT = Path(__file__).resolve().parent / "data" / "demo_scene"


def main():
    rng = np.random.default_rng(2024)
    setup = slat_scene(random_target(rng, 56), size=32, noise_rate=2.0, seed=7)
    sc, cam, traj = setup.scene, setup.cam, setup.traj
    OUT.mkdir(parents=True, exist_ok=True)
    write_pgm(OUT / "target.pgm", sc.target_image)
    write_pgm(OUT / "occluder_mask.pgm", sc.occluder_mask.astype(float))
    write_pgm(OUT / "occluder_texture.pgm", sc.occluder_texture)
    lines = [
        "# demo scene: target plane behind vertical slats, camera sweeping along x",
        "target_image = target.pgm",
        "occluder_mask = occluder_mask.pgm",
        "occluder_texture = occluder_texture.pgm",
        f"d = {sc.d!r}",
        f"d_occ = {sc.d_occ!r}",
        f"pitch_target = {sc.pitch_target!r}",
        f"pitch_occ = {sc.pitch_occ!r}",
        f"origin = {sc.origin[0]!r},{sc.origin[1]!r}",
        f"background = {sc.background!r}",
        f"eta = {sc.eta!r}",
        f"noise_rate = {sc.noise_rate!r}",
        f"seed = {sc.seed}",
        "",
        f"width = {cam.width}",
        f"height = {cam.height}",
        f"fx = {cam.fx!r}",
        f"fy = {cam.fy!r}",
        f"cx = {cam.cx!r}",
        f"cy = {cam.cy!r}",
        "",
        "velocity = " + ",".join(repr(float(v)) for v in traj.velocity),
        f"t_start = {traj.t_start}",
        f"t_end = {traj.t_end}",
        f"ref_time = {traj.ref_time}",
        f"dt_sample = {setup.dt_sample}",
    ]
    (OUT / "scene.cfg").write_text("\n".join(lines) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
