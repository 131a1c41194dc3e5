# coding: utf-8

# # Fitting one frame
#
# A synthetic face rig, one target mesh, and the two models side by side: the
# linear blendshape model solved as a box-constrained QP, and the model that
# keeps the pairwise corrective shapes, solved by majorization-minimization.

# In[1]:

import numpy as np

from rigsolve import GenSpec, SolverConfig, build_cache, generate, mesh_error, solve
from rigsolve.qp import QpProblem, solve_qp


# A reduced rig keeps the script quick; `GenSpec()` with no arguments gives the
# full benchmark size (6012 vertices, 100 controllers).

# In[2]:

spec = GenSpec(n_vertices=1500, m=40, n_pairs=60, n_triples=10, n_quads=4, n_frames=20, seed=3)
data = generate(spec)
rig = data.rig
print(rig.n_vertices, "vertices,", rig.m, "controllers")
print("corrections per order:", [len(t) for t in rig.tables()])


# Spectral data of the pairwise terms depends on the rig only, so it is built
# once and reused for every frame.

# In[3]:

cache = build_cache(rig)
target = data.targets[7]
truth = data.weights[7]
print("active controllers in the ground truth:", int(np.count_nonzero(truth)))


# In[4]:

lam = 5.0
lin = solve_qp(QpProblem(rig.blendshapes, target, lam))
print("linear model    mesh error %.3e  (%d iterations)" % (mesh_error(rig, lin.w, target), lin.iterations))


# Starting from the linear solution usually needs the fewest MM iterations.

# In[5]:

rep = solve(rig, cache, target, SolverConfig(lam=lam, init="linear", max_iters=500))
print("quadratic model mesh error %.3e  (%d iterations, converged=%s)"
      % (mesh_error(rig, rep.weights, target), rep.iterations, rep.converged))
print("objective %.6g -> %.6g" % (rep.objective_trace[0], rep.objective))


# Weight error against the ground truth, largest first.

# In[6]:

err = np.abs(rep.weights - truth)
for j in np.argsort(err)[::-1][:5]:
    print("controller %2d  true %.3f  fitted %.3f" % (j, truth[j], rep.weights[j]))
