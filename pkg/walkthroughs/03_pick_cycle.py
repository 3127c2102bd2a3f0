# %% [markdown]
# # Picking a row of clusters in one cycle
#
# Three preset clusters are laid out 15 cm apart. Each pick starts where the
# previous one ended, and a picked fruit leaves the scene before the next
# plan is made.

# %%
import numpy as np

from ipromp import generate_nominals, learn_segments, pick_cycle, preset
from ipromp.iplanner import PickFailure
from ipromp.scene import merge_scenes

row = merge_scenes(*[preset(c).translated((0.0, 0.15 * j, 0.0), f"_{j}")
                     for j, c in enumerate(("C_IV", "C_VI", "C_II"))])
order = [f.id for f in row.ripe]
models = learn_segments(generate_nominals(T=2.0, rng_seed=0))

results = pick_cycle(row, order, models)
for tid, r in zip(order, results):
    if isinstance(r, PickFailure):
        print(f"{tid}: failed ({r.error})")
        continue
    start, end = r.mean_path.mean[0], r.mean_path.mean[-1]
    print(f"{tid}: from {np.round(start, 3)} to {np.round(end, 3)}, "
          f"{len(r.plan.directives)} push(es), {1000 * r.planning_time:.1f} ms")

# %% [markdown]
# Consecutive picks join up: each start sits on the previous goal.

# %%
for a, b in zip(results, results[1:]):
    print("gap", np.linalg.norm(b.mean_path.mean[0] - a.schedule.waypoints[-1].X_star))
