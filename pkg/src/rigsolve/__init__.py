"""Inverse rig solving for blendshape facial animation.

A rig maps controller weights ``w`` in ``[0, 1]^m`` to mesh displacements
through blendshapes plus pairwise and higher-order corrective shapes. Given a
target mesh, :func:`solve` recovers weights under the rig truncated after the
pairwise corrections by majorization-minimization with exact per-controller
quartic steps. :func:`solve_qp` solves the linear-rig baseline.
"""

from .io import load_rig, load_targets, load_weights, save_rig, save_targets, save_weights
from .metrics import PAPER_LAMBDAS, FrameMetrics, cardinality, mesh_error, run_sweep, solve_frame
from .mm import Init, SolveReport, SolverConfig, objective_quadratic, solve, surrogate_coefficients
from .qp import QpProblem, QpResult, solve_qp
from .quartic import QuarticProblem, minimize_quartic
from .rig import Rig, RigError, evaluate_full, evaluate_linear, evaluate_quadratic
from .spectral import QuadraticCache, build_cache
from .synth import PAPER_SCALE, GenSpec, SyntheticData, generate

__version__ = "0.1.0"

__all__ = [
    "Rig", "RigError", "evaluate_full", "evaluate_quadratic", "evaluate_linear",
    "QuadraticCache", "build_cache",
    "QuarticProblem", "minimize_quartic",
    "Init", "SolverConfig", "SolveReport", "solve", "objective_quadratic",
    "surrogate_coefficients",
    "QpProblem", "QpResult", "solve_qp",
    "GenSpec", "SyntheticData", "generate", "PAPER_SCALE",
    "PAPER_LAMBDAS", "FrameMetrics", "mesh_error", "cardinality", "solve_frame", "run_sweep",
    "load_rig", "save_rig", "load_targets", "save_targets", "load_weights", "save_weights",
]
