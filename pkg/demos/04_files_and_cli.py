# coding: utf-8

# # Files and the command line
#
# Rigs are a JSON manifest plus one little-endian float64 blob; targets and
# weights are frame-major blobs with a JSON sidecar. The same workflow is
# available as `rigsolve gen | solve | sweep | eval | inspect`.

# In[1]:

import json
import tempfile
from pathlib import Path

import numpy as np

from rigsolve import GenSpec, generate, load_rig, load_targets, save_rig, save_targets
from rigsolve.cli import cli_main


# In[2]:

work = Path(tempfile.mkdtemp())
data = generate(GenSpec(n_vertices=300, m=10, n_pairs=12, n_triples=2, n_quads=1, n_frames=6,
                        sparsity=0.5, seed=2))
manifest = save_rig(data.rig, work)
print(json.dumps(json.loads(manifest.read_text())["sections"][:3], indent=1))
assert load_rig(manifest) == data.rig


# Targets stored in absolute coordinates come back neutral-relative.

# In[3]:

save_targets(work / "abs", data.targets, data.rig, absolute=True)
back = load_targets(work / "abs", data.rig)
print("largest difference after the round trip through absolute coordinates:",
      np.abs(back - data.targets).max())


# The CLI entry point returns the exit status instead of exiting.

# In[4]:

cli_main(["inspect", "--rig", str(manifest)])
status = cli_main(["solve", "--rig", str(manifest), "--targets", str(work / "abs"),
                   "--model", "quadratic", "--init", "linear", "--lambda", "2.5",
                   "--out", str(work / "weights"), "--report", str(work / "report.csv")])
print("exit status", status)
print((work / "report.csv").read_text())


# Errors are a single greppable line on stderr and a nonzero status.

# In[5]:

print("exit status", cli_main(["inspect", "--rig", str(work / "missing.json")]))
