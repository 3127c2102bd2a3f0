# %% [markdown]
# # Learning a movement primitive from synthetic demonstrations
#
# We generate the default demonstration set (ten nominal reaches, ten noisy
# copies each), fit Gaussian-basis primitives of two sizes and look at how
# closely each one tracks the training mean. Then we pin the primitive to a
# new goal and check that it gets there.

# %%
import numpy as np

from ipromp import GaussianBasis, Waypoint, condition, generate_nominals, learn, marginal
from ipromp.experiments import max_deviation

demos = generate_nominals(rng_seed=0)
print(f"{len(demos)} demonstrations over {demos.T:g} s, {len(demos.demos[0])} samples each")
print("goals:\n", np.round(demos.goals, 3))

# %% [markdown]
# ## Basis count
#
# A wide bandwidth (h = 1) makes neighbouring Gaussians overlap heavily, so a
# handful of them can only produce a very smooth mean. More functions buy a
# closer fit.

# %%
for k in (4, 10):
    model = learn(demos, GaussianBasis(k, 1.0))
    print(f"k={k:2d}: largest gap to the training mean {1000 * max_deviation(model, demos):.3f} mm")

# %% [markdown]
# ## Conditioning on a new goal
#
# A waypoint with tiny variance acts as a hard constraint. The posterior mean
# passes through it and the variance there collapses.

# %%
model = learn(demos, GaussianBasis(10))
goal = np.array([0.32, 0.04, 0.58])
post = condition(model, Waypoint(1.0, goal, 1e-10))
before = marginal(model, [1.0], noise=False)
after = marginal(post, [1.0], noise=False)
print("prior end point    ", np.round(before.mean[0], 4), "std", np.sqrt(before.var[0]))
print("posterior end point", np.round(after.mean[0], 4), "std", np.sqrt(after.var[0]))
print("miss distance", np.linalg.norm(after.mean[0] - goal))
