# %% [markdown]
# # What if the depth (or speed) estimate is wrong?
#
# Refocusing shifts each event by fx * (camera travel) / depth. Getting the
# depth wrong by some factor scales every shift by the inverse, exactly as a
# wrong camera-speed estimate would. A single bright point behind slats makes
# the effect easy to measure: at the right depth all of its events land on
# one pixel; at the wrong depth they spread along the motion direction.
#
# `python demos/04_depth_sensitivity.py`

# %%
import math

import numpy as np

from esai.events import EventLabel
from esai.refocus import RefocusParams, alignment_score, refocus_stream
from esai.scenes import point_reference_pixel, point_target_scene
from esai.simulator import simulate_events

setup = point_target_scene(size=64)
events = simulate_events(setup.scene, setup.cam, setup.traj, setup.dt_sample)
signal = events.with_label(EventLabel.SignalOA)
print(f"{len(events)} events, {len(signal)} from the point being uncovered or covered")
print("reference pixel of the point:", point_reference_pixel(setup))

# %% [markdown]
# RMS distance of the refocused signal events from their centroid, over a
# grid of depth errors:

# %%
for factor in np.round(np.arange(0.6, 1.41, 0.1), 1):
    out, rep = refocus_stream(events, RefocusParams(setup.cam, setup.traj,
                                                    setup.scene.d * factor))
    spread = math.sqrt(alignment_score(out, EventLabel.SignalOA))
    bar = "#" * int(round(spread * 4))
    print(f"depth x{factor:.1f}  spread {spread:5.2f} px  dropped {rep['dropped']:4d}  {bar}")

# %% [markdown]
# The floor of about half a pixel at the true depth comes from rounding:
# an edge event fires while the point straddles two pixels.
