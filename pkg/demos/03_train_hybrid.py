# %% [markdown]
# # Training the spiking encoder and convolutional decoder
#
# The refocused events are cut into ten equal time bins. A small spiking
# encoder integrates the bins with leaky neurons, so a pixel only fires if
# events keep arriving there (signal from the target plane lines up after
# refocusing, stray events do not). A convolutional decoder turns the spike
# rates into an image.
#
# This trains on eight random scenes and tests on scenes it has not seen.
# It takes well under a minute on one core.
#
# `python demos/03_train_hybrid.py`

# %%
import time
from pathlib import Path

import numpy as np

from esai.imageio import write_pgm
from esai.metrics import psnr
from esai.network import TrainConfig, build_network, save_checkpoint, train
from esai.reconstruction import reconstruct_acc, reconstruct_hybrid
from esai.scenes import toy_family

OUT = Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)

# %%
train_set = toy_family(7, 8, size=32, n=10)
test_set = toy_family(1234, 3, size=32, n=10)
net = build_network(n_steps=10, seed=0)
print(f"{net.num_params()} parameters")

t0 = time.perf_counter()
cfg = TrainConfig(epochs=125, seed=0, max_steps=1000)
net, history = train(net, [(s.frames, s.truth) for s in train_set], cfg)
print(f"trained {len(history)} epochs in {time.perf_counter() - t0:.1f} s")
for e in (0, len(history) // 4, len(history) // 2, len(history) - 1):
    print(f"  epoch {e:3d}  loss {history[e]:.3f}")
save_checkpoint(net, OUT / "toy.esai")

# %% [markdown]
# ## Held-out scenes

# %%
for i, s in enumerate(test_set):
    hy = reconstruct_hybrid(s.frames, net)
    acc = reconstruct_acc(s.refocused)
    print(f"scene {i}: hybrid {psnr(hy.image, s.truth):.2f} dB, "
          f"ACC {psnr(acc.image, s.truth):.2f} dB, "
          f"spike rates {np.round(hy.report['spike_rates'], 3).tolist()}")
    write_pgm(OUT / f"heldout{i}_hybrid.pgm", hy.image)
    write_pgm(OUT / f"heldout{i}_acc.pgm", acc.image)
    write_pgm(OUT / f"heldout{i}_truth.pgm", s.truth)
