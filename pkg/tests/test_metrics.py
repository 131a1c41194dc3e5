import math

import numpy as np
import pytest

from rigsolve import PAPER_LAMBDAS, Rig, cardinality, mesh_error, run_sweep, solve_frame
from rigsolve.metrics import CSV_HEADER, read_csv, summarize, write_csv


def test_default_lambda_grid():
    assert PAPER_LAMBDAS == (0.0, 2.5, 5.0, 7.5, 10.0, 20.0, 50.0, 100.0, 500.0)


def test_mesh_error_divides_by_vertex_count():
    rig = Rig(np.zeros(6), np.eye(6)[:, :2])
    target = np.array([0, 0, 0, 3.0, 4.0, 0])
    # ||(0,0,0,3,4,0)|| = 5 over two vertices
    assert mesh_error(rig, np.zeros(2), target) == 2.5


def test_cardinality_threshold():
    w = np.array([0.0, 1e-4, 1.0001e-4, 0.5, 1.0])
    assert cardinality(w) == 3
    assert cardinality(w, threshold=0.6) == 1


def test_solve_frame_models(small, small_cache):
    t = small.targets[4]
    _, lin = solve_frame(small.rig, small_cache, t, 2.5, "linear")
    _, quad = solve_frame(small.rig, small_cache, t, 2.5, "quadratic", "linear", frame=4)
    assert lin.init == "none" and quad.init == "linear" and quad.frame == 4
    assert lin.lam == quad.lam == 2.5
    with pytest.raises(ValueError):
        solve_frame(small.rig, small_cache, t, 0.0, "cubic")


def test_sweep_order_and_threads(small, small_cache):
    kw = dict(lambdas=(0.0, 5.0), models=("linear", "quadratic"),
              inits=("zero", "linear"), max_iters=20)
    rows, ws = run_sweep(small.rig, small_cache, small.targets[:3], return_weights=True, **kw)
    keys = [(r.lam, r.model, r.init, r.frame) for r in rows]
    assert len(rows) == 2 * 3 * 3
    assert keys[:4] == [(0.0, "linear", "none", 0), (0.0, "linear", "none", 1),
                        (0.0, "linear", "none", 2), (0.0, "quadratic", "zero", 0)]
    rows4, ws4 = run_sweep(small.rig, small_cache, small.targets[:3], threads=4,
                           return_weights=True, **kw)
    assert all(a.tobytes() == b.tobytes() for a, b in zip(ws, ws4))
    assert [r.mesh_error for r in rows] == [r.mesh_error for r in rows4]


def test_sweep_records_errors(small, small_cache):
    rows = run_sweep(small.rig, small_cache, small.targets[:1] * np.nan, lambdas=(0.0,),
                     models=("quadratic",), inits=("zero",))
    assert rows[0].error and math.isnan(rows[0].mesh_error)


def test_csv_roundtrip(small, small_cache, tmp_path):
    rows = run_sweep(small.rig, small_cache, small.targets[:2], lambdas=(0.0, 7.5),
                     inits=("pseudoinverse",), max_iters=10)
    path = tmp_path / "r.csv"
    text = write_csv(rows, path)
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    assert b"\r" not in path.read_bytes()
    back = read_csv(path)
    for a, b in zip(rows, back):
        assert (a.frame, a.lam, a.model, a.init, a.mesh_error, a.cardinality,
                a.iterations, a.wall_ms, a.objective) == \
               (b.frame, b.lam, b.model, b.init, b.mesh_error, b.cardinality,
                b.iterations, b.wall_ms, b.objective)
    assert read_csv(text)[0].mesh_error == rows[0].mesh_error


def test_summarize(small, small_cache):
    rows = run_sweep(small.rig, small_cache, small.targets[:4], lambdas=(1.0,),
                     models=("linear",))
    (s,) = summarize(rows)
    assert s["frames"] == 4
    assert s["mesh_error"] == pytest.approx(np.mean([r.mesh_error for r in rows]))
    assert s["iterations_q1"] <= s["iterations_median"] <= s["iterations_q3"]


@pytest.mark.parametrize("scale", [0.0, 0.25, 0.5, 1.0])
def test_correction_scale_sweep(scale):
    # reduced benchmark; the gap between models should track the corrections' size
    from rigsolve import GenSpec, build_cache, generate

    spec = GenSpec(n_vertices=600, m=20, n_pairs=30, n_triples=6, n_quads=2,
                   n_frames=8, sparsity=0.3, correction_scale=scale, seed=5)
    data = generate(spec)
    cache = build_cache(data.rig)
    lin, quad = [], []
    for t in data.targets:
        lin.append(solve_frame(data.rig, cache, t, 10.0, "linear")[1].mesh_error)
        quad.append(solve_frame(data.rig, cache, t, 10.0, "quadratic", "linear")[1].mesh_error)
    lin, quad = np.mean(lin), np.mean(quad)
    if scale == 0.0:
        # no corrections: both models coincide and MM cannot leave the linear optimum by much
        assert quad <= lin * (1 + 1e-6)
    else:
        assert quad < lin
