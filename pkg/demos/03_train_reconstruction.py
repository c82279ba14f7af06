"""Train a small depth reconstruction network from echo histograms.

Run with ``python3 demos/03_train_reconstruction.py`` (a few minutes on one core).
"""
# %%
import numpy as np

from echoimaging.dataset import ExperimentPlan, simulate_scenes
from echoimaging.metrics import mse
from echoimaging.reconstruct import TrainConfig, TrainingData, forward, train

plan = ExperimentPlan(n_train=300, n_test=40, max_bounces=(1, 4))
ids, _, _, counts, depths = simulate_scenes(plan, list(plan.train_ids()) + list(plan.test_ids()))
depths = np.array(depths)
n = plan.n_train

# %% Same scenes, two bounce caps. Only the histograms differ.
# Inputs are square-rooted counts, scaled by the training maximum.
for k in plan.max_bounces:
    x = np.array(counts[k])
    tr = TrainingData.from_raw(x[:n], depths[:n], plan.scene.room.diagonal, count_transform="sqrt")
    te = TrainingData.from_raw(x[n:], depths[n:], plan.scene.room.diagonal, tr.count_scale, "sqrt")
    params, report = train(tr, TrainConfig(epochs=20, batch_size=20, seed=0), te)
    mean_image = np.mean([mse(tr.y.mean(0), t) for t in te.y])
    print(f"k={k}: test MSE {report.final_test_mse:.5f} (mean-image baseline {mean_image:.5f}),"
          f" {report.wall_clock_s:.0f} s")

# %% Predictions come back in normalised depth; multiply by the room diagonal for meters.
pred = forward(params, te.x[:1])[0] * plan.scene.room.diagonal
print("predicted depth range:", pred.min().round(2), "-", pred.max().round(2), "m")
