"""How much does each extra bounce tell us, and where is a scatterer in 2-D?

Run with ``python3 demos/02_information_and_localisation.py`` (about a minute).
"""
# %%
from echoimaging.dataset import ExperimentPlan, run_info_analysis
from echoimaging.localizer2d import forward_times, invert

# %% Information carried by the k-th bounce beyond what k-1 bounces already gave.
# Fewer scenes than the full analysis so the demo stays quick.
plan = ExperimentPlan(n_train=400, n_test=0, rays_per_scene=10_000, max_bounces=(1, 2, 3, 4, 5))
curve = run_info_analysis(plan)
print(f"H(X1) = {curve.h1_bits:.2f} bits")
for k, ui in curve.rows():
    print(f"UI(X{k - 1}; X{k}) = {ui:.2f} bits")

# %% A scatterer in front of a mirror wall: three echo times, two unknowns.
t = forward_times(2.0, 1.0, wall_x=3.0, c=1.0)
print("echo times:", round(t.t0, 6), round(t.t1, 6), round(t.t2, 6))
est = invert(t.t0, t.t2, wall_x=3.0, c=1.0, t1=t.t1)
print("recovered x0 =", est.x0, " |y0| =", est.y0_abs, " candidates:", est.candidates)
