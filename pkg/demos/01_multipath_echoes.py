"""Echoes in a closed room, bounce by bounce.

Run with ``python3 demos/01_multipath_echoes.py``. Prints text only.
"""
# %%
import numpy as np

from echoimaging.dataset import ExperimentPlan, scene_for
from echoimaging.histogram import max_tof, truncate
from echoimaging.scene import SPEED_OF_LIGHT, Room
from echoimaging.tracer import image_source_arrival_times, render_depth, trace_rays

plan = ExperimentPlan()
scene = scene_for(plan, 0)
print("object centre (x, y):", scene.object.center_x, scene.object.center_y)

# %% One trace keeps every ray's fate; lower bounce caps are just filters on it.
res = trace_rays(scene, 10_000, 8, plan.window_s)
print(res.outcome_counts())
for k in (1, 2, 4, 8):
    h = res.histogram(plan.bins, plan.window_s, k)
    print(f"k={k}: {int(h.total):5d} counts in {int(np.count_nonzero(h.counts)):3d} bins")

# %% Single-bounce light can only arrive before max_tof(1); truncating there keeps it all.
full = res.histogram(plan.bins, plan.window_s)
cut = truncate(full, max_tof(1, scene.room, SPEED_OF_LIGHT))
print("max_tof(1) =", max_tof(1, scene.room, SPEED_OF_LIGHT) * 1e9, "ns;",
      "kept", int(cut.total), "of", int(full.total), "counts")

# %% In a mirror room each arrival time belongs to a mirror image of the emitter.
room = Room(3.0, 4.0, 2.5, 1.0, 1.0)
times = image_source_arrival_times(room, (0.7, 1.3, 1.1), (0.7, 1.3, 1.1), 2)
print("first image-source times (ns):", np.round(np.array(times[:6]) * 1e9, 3))

# %% The ground truth the network learns: a radial depth map from the camera.
depth = render_depth(scene).depth
print("depth map", depth.shape, "range", depth.min().round(2), "-", depth.max().round(2), "m")
