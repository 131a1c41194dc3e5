# coding: utf-8

# # Accuracy against sparsity
#
# A small version of the benchmark: every frame, every regularization weight on
# the standard grid, both models, all three starting points.

# In[1]:

from rigsolve import PAPER_LAMBDAS, GenSpec, build_cache, generate, run_sweep
from rigsolve.metrics import summarize


# In[2]:

data = generate(GenSpec(n_vertices=1000, m=30, n_pairs=45, n_triples=9, n_quads=3, n_frames=10, seed=7))
cache = build_cache(data.rig)
rows = run_sweep(data.rig, cache, data.targets, PAPER_LAMBDAS, max_iters=200)
print(len(rows), "solves")


# Frame averages. Cardinality counts weights above 1e-4.

# In[3]:

print("lambda  model      init           mesh_error  card  median_iters")
for s in summarize(rows):
    print("%6g  %-9s  %-13s  %.3e  %5.1f  %5.0f" % (
        s["lambda"], s["model"], s["init"], s["mesh_error"], s["cardinality"], s["iterations_median"]))


# Write the rows in the benchmark CSV layout.

# In[4]:

from rigsolve.metrics import write_csv
print(write_csv(rows[:3]))
