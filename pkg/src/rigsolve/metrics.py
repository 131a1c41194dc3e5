"""Fidelity and sparsity metrics, and the lambda-sweep benchmark."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .mm import Init, SolverConfig, linear_operator, solve
from .qp import QpProblem, qp_objective, solve_qp
from .rig import Rig, RigError, check_weights, evaluate_full
from .spectral import QuadraticCache

__all__ = [
    "PAPER_LAMBDAS",
    "FrameMetrics",
    "mesh_error",
    "cardinality",
    "solve_frame",
    "run_sweep",
    "summarize",
    "write_csv",
    "read_csv",
    "CSV_HEADER",
]

PAPER_LAMBDAS = (0.0, 2.5, 5.0, 7.5, 10.0, 20.0, 50.0, 100.0, 500.0)
DEFAULT_THRESHOLD = 1e-4
CSV_HEADER = (
    "frame", "lambda", "model", "init", "mesh_error",
    "cardinality", "iterations", "wall_ms", "objective",
)
MODELS = ("linear", "quadratic")


def mesh_error(rig: Rig, w, target) -> float:
    """``||f(w) - target|| / n_vertices`` with the complete rig.

    Reported as RMSE in the literature, but the divisor is the vertex count
    ``n`` rather than ``sqrt(3n)``; kept that way for comparability.
    """
    target = np.asarray(target, dtype=np.float64)
    if target.shape != (rig.n_coords,):
        raise RigError("target", f"length {target.size} does not match 3n = {rig.n_coords}")
    return float(np.linalg.norm(evaluate_full(rig, w) - target) / rig.n_vertices)


def cardinality(w, threshold: float = DEFAULT_THRESHOLD) -> int:
    """Number of weights strictly above ``threshold``."""
    return int(np.count_nonzero(np.asarray(w) > threshold))


@dataclass
class FrameMetrics:
    frame: int
    lam: float
    model: str
    init: str
    mesh_error: float
    cardinality: int
    iterations: int
    wall_ms: float
    objective: float
    converged: bool = True
    error: str = ""
    # not written to CSV: whether every iterate stayed in [0, 1], and the
    # objective trace when requested
    iterates_feasible: bool = True
    trace: list | None = None

    def csv_row(self) -> list[str]:
        return [
            str(self.frame),
            _fmt(self.lam),
            self.model,
            self.init,
            _fmt(self.mesh_error),
            str(self.cardinality),
            str(self.iterations),
            _fmt(self.wall_ms),
            _fmt(self.objective),
        ]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def solve_frame(
    rig: Rig,
    cache: QuadraticCache,
    target,
    lam: float,
    model: str,
    init: str | Init = Init.ZERO,
    *,
    eps: float = 1e-6,
    max_iters: int = 200,
    qp_tol: float = 1e-8,
    qp_max_iters: int = 5000,
    threshold: float = DEFAULT_THRESHOLD,
    frame: int = 0,
    record: bool = False,
):
    """Solve one frame with one model; returns ``(weights, FrameMetrics)``.

    Every iterate is checked against the box; ``record=True`` also keeps the
    objective trace on the returned metrics.
    """
    target = np.asarray(target, dtype=np.float64)
    feasible = [True]

    def watch(_, w):
        if not (np.all(w >= 0.0) and np.all(w <= 1.0)):
            feasible[0] = False

    trace = None
    if model == "linear":
        start = time.perf_counter()
        res = solve_qp(
            QpProblem(
                rig.blendshapes, target, lam, qp_tol, qp_max_iters,
                operator=linear_operator(cache),
            ),
            record=record,
            callback=watch,
        )
        wall = time.perf_counter() - start
        w, iters, converged, trace = res.w, res.iterations, res.converged, res.trace
        objective = qp_objective(rig.blendshapes, target, w, lam)
        init_name = "none"
    elif model == "quadratic":
        config = SolverConfig(lam=lam, eps=eps, max_iters=max_iters, init=Init(init))
        report = solve(rig, cache, target, config, callback=watch)
        w, iters, converged = report.weights, report.iterations, report.converged
        wall, objective = report.wall_time, report.objective
        init_name = config.init.value
        if record:
            trace = report.objective_trace
    else:
        raise ValueError(f"unknown model {model!r}")
    check_weights(rig, w)
    return w, FrameMetrics(
        frame=frame,
        lam=float(lam),
        model=model,
        init=init_name,
        mesh_error=mesh_error(rig, w, target),
        cardinality=cardinality(w, threshold),
        iterations=int(iters),
        wall_ms=1e3 * wall,
        objective=float(objective),
        converged=bool(converged),
        iterates_feasible=feasible[0],
        trace=trace,
    )


def _cells(lambdas, models, inits, n_frames):
    for lam in lambdas:
        for model in models:
            for init in (["none"] if model == "linear" else [Init(i).value for i in inits]):
                for frame in range(n_frames):
                    yield float(lam), model, init, frame


def run_sweep(
    rig: Rig,
    cache: QuadraticCache,
    targets,
    lambdas: Sequence[float] = PAPER_LAMBDAS,
    models: Sequence[str] = MODELS,
    inits: Sequence[str | Init] = tuple(Init),
    *,
    threads: int = 1,
    return_weights: bool = False,
    progress=None,
    **solver_kwargs,
):
    """Solve every (lambda, model, init, frame) cell.

    The linear model has no initialization and contributes one row per
    (lambda, frame). Rows come back ordered by lambda, model, init, frame
    regardless of ``threads``. A solver exception is recorded in the row's
    ``error`` field with NaN metrics instead of aborting the sweep.

    With ``return_weights=True`` a list of weight vectors aligned with the rows
    is returned as well.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    for model in models:
        if model not in MODELS:
            raise ValueError(f"unknown model {model!r}")
    cells = list(_cells(lambdas, models, inits, targets.shape[0]))

    def run(cell):
        lam, model, init, frame = cell
        try:
            return solve_frame(
                rig, cache, targets[frame], lam, model,
                Init.ZERO if init == "none" else init, frame=frame, **solver_kwargs,
            )
        except Exception as exc:  # recorded per cell
            nan = float("nan")
            return None, FrameMetrics(
                frame, lam, model, init, nan, 0, 0, nan, nan, False,
                f"{type(exc).__name__}: {exc}",
            )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, cells))
    else:
        results = []
        for k, cell in enumerate(cells):
            results.append(run(cell))
            if progress is not None:
                progress(k + 1, len(cells))
    rows = [r[1] for r in results]
    if return_weights:
        return rows, [r[0] for r in results]
    return rows


def summarize(rows: Iterable[FrameMetrics]) -> list[dict]:
    """Frame averages (and iteration quartiles) per (lambda, model, init)."""
    groups: dict = {}
    for row in rows:
        groups.setdefault((row.lam, row.model, row.init), []).append(row)
    out = []
    for (lam, model, init), grp in groups.items():
        iters = np.array([r.iterations for r in grp], dtype=float)
        out.append(
            {
                "lambda": lam,
                "model": model,
                "init": init,
                "frames": len(grp),
                "mesh_error": float(np.mean([r.mesh_error for r in grp])),
                "cardinality": float(np.mean([r.cardinality for r in grp])),
                "iterations_median": float(np.median(iters)),
                "iterations_q1": float(np.percentile(iters, 25)),
                "iterations_q3": float(np.percentile(iters, 75)),
                "wall_ms": float(np.mean([r.wall_ms for r in grp])),
            }
        )
    return out


def write_csv(rows: Iterable[FrameMetrics], path=None) -> str:
    """Write rows with the fixed header; returns the text. ``path=None`` only returns."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.csv_row())
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text


def read_csv(path_or_text) -> list[FrameMetrics]:
    if isinstance(path_or_text, Path) or (
        isinstance(path_or_text, str) and "\n" not in path_or_text
    ):
        text = Path(path_or_text).read_text(encoding="utf-8")
    else:
        text = path_or_text
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header}")
    rows = []
    for rec in reader:
        if not rec:
            continue
        rows.append(
            FrameMetrics(
                frame=int(rec[0]),
                lam=float(rec[1]),
                model=rec[2],
                init=rec[3],
                mesh_error=float(rec[4]),
                cardinality=int(rec[5]),
                iterations=int(rec[6]),
                wall_ms=float(rec[7]),
                objective=float(rec[8]),
            )
        )
    return rows

