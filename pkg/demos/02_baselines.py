# %% [markdown]
# # Two baselines: accumulating events and averaging frames
#
# Before training anything, compare two direct reconstructions of the
# occluded plane:
#
# * **ACC** sums refocused event polarities per pixel and stretches the
#   result to [0, 1].
# * **F-SAI** takes conventional frames along the same sweep, shifts each to
#   the reference pose for the target depth and averages them. The slats
#   blur into a veil rather than disappearing.
#
# `python demos/02_baselines.py`

# %%
from pathlib import Path

from esai.imageio import write_pgm
from esai.metrics import evaluate
from esai.reconstruction import reconstruct_acc, reconstruct_fsai
from esai.refocus import RefocusParams, refocus_stream
from esai.simulator import ground_truth, load_scene_config, simulate_events, simulate_frames

HERE = Path(__file__).resolve().parent
OUT = HERE / "out"
OUT.mkdir(exist_ok=True)
cfg = load_scene_config(HERE / "data" / "demo_scene" / "scene.cfg")
truth = ground_truth(cfg.scene, cfg.camera, cfg.trajectory)

# %%
events = simulate_events(cfg.scene, cfg.camera, cfg.trajectory, cfg.dt_sample)
refocused, _ = refocus_stream(events, RefocusParams(cfg.camera, cfg.trajectory, cfg.scene.d))
acc = reconstruct_acc(refocused)

views = simulate_frames(cfg.scene, cfg.camera, cfg.trajectory, 35)
fsai = reconstruct_fsai(views, cfg.camera, cfg.scene.d, cfg.trajectory.ref_center)

# %% [markdown]
# PSNR and SSIM need the ground truth; entropy and contrast (STD) are
# reference-free. A plain occluded frame from the reference pose is included
# for scale.

# %%
occluded = views[len(views) // 2][1]
rows = {"occluded frame": occluded, "ACC": acc.image, "F-SAI": fsai.image}
print(f"{'method':15s} {'PSNR':>7s} {'SSIM':>6s} {'H2D':>6s} {'STD':>6s}")
for name, img in rows.items():
    m = evaluate(img, truth)
    print(f"{name:15s} {m.psnr:7.2f} {m.ssim:6.3f} {m.entropy2d:6.2f} {m.std:6.1f}")
    write_pgm(OUT / f"baseline_{name.split()[0].lower().replace('-', '')}.pgm", img)

# %% [markdown]
# ACC keeps edges but loses absolute brightness: a flat region fires no
# events at all, so it comes out mid-gray whatever its true value. That is
# the gap the learned reconstruction is meant to close.
