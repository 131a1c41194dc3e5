# coding: utf-8

# # The separable upper bound
#
# Each MM step replaces the objective around the current weights by a quartic
# in the increment that splits over controllers. This script evaluates both
# along a random direction to show the bound touching at zero and staying above.

# In[1]:

import numpy as np

from rigsolve import GenSpec, build_cache, generate, objective_quadratic, surrogate_coefficients


# In[2]:

data = generate(GenSpec(n_vertices=800, m=20, n_pairs=30, n_triples=0, n_quads=0, n_frames=4, seed=1))
rig, cache = data.rig, build_cache(data.rig)
target = data.targets[2]
rng = np.random.default_rng(0)
w = rng.uniform(0.2, 0.8, size=rig.m)
lam = 2.5
sur = surrogate_coefficients(rig, cache, w, target, lam)
print("p=%.4g  r=%.4g  s=%.4g" % (sur.p, sur.r, sur.s))


# Walk along a direction, staying inside the box.

# In[3]:

d = rng.normal(size=rig.m)
d /= np.abs(d).max() * 5
print("   t   objective   surrogate")
for t in np.linspace(-1, 1, 9):
    v = t * d
    f = objective_quadratic(rig, cache, np.clip(w + v, 0, 1), target, lam)
    print("%5.2f  %10.4f  %10.4f" % (t, f, sur.value(v)))


# The bound is loose away from zero: its curvature is the sum of all squared
# coordinate gradients, which is why plain zero starts need many iterations.
