import numpy as np
from hypothesis import given, strategies as st

from oracles import dense_quadratic_rig, jacobi_eigenvalues
from rigsolve import Rig, build_cache, evaluate_quadratic
from rigsolve.spectral import dense_d_matrix, h_row, quad_form


def test_single_pair_spectrum():
    # D = [[0, c/2], [c/2, 0]] plus a zero row: eigenvalues -c/2, 0, c/2
    C = np.zeros(3)
    C[1] = 4.0
    rig = Rig(np.zeros(3), np.eye(3), corrections2=[((0, 2), C)])
    cache = build_cache(rig)
    np.testing.assert_array_equal(cache.lambda_min, [0.0, -2.0, 0.0])
    np.testing.assert_array_equal(cache.lambda_max, [0.0, 2.0, 0.0])
    assert cache.s_coefficient == 2 * 3 * 4.0


def test_no_pairs_gives_zero_spectrum():
    cache = build_cache(Rig(np.zeros(6), np.ones((6, 2))))
    assert cache.n_pairs == 0
    assert not cache.sigma_max.any() and cache.s_coefficient == 0.0


def test_against_jacobi_oracle(small, small_cache):
    for i in range(0, small.rig.n_coords, 7):
        D = dense_d_matrix(small_cache, i)
        ev = jacobi_eigenvalues(D)
        assert abs(ev[0] - small_cache.lambda_min[i]) <= 1e-10
        assert abs(ev[-1] - small_cache.lambda_max[i]) <= 1e-10


def test_sigma_is_exact_max(small_cache):
    ref = np.maximum(np.abs(small_cache.lambda_min), np.abs(small_cache.lambda_max))
    np.testing.assert_array_equal(small_cache.sigma_max, ref)
    assert small_cache.s_coefficient == 2 * small_cache.m * np.sum(small_cache.sigma_max**2)


def test_dense_d_is_symmetric_and_reproduces_pairs(small, small_cache, rng):
    w = rng.uniform(size=small.rig.m)
    for i in (0, 50, 333):
        D = dense_d_matrix(small_cache, i)
        np.testing.assert_array_equal(D, D.T)
        assert abs(w @ D @ w - quad_form(small_cache, i, w)) < 1e-12


def test_operator_matches_quadratic_rig(small, small_cache, rng):
    rig = small.rig
    w = rng.uniform(size=rig.m)
    via_cache = small_cache.operator @ small_cache.stacked(w)
    ref = dense_quadratic_rig(rig.blendshapes, rig.corrections2.controllers,
                              rig.corrections2.vectors, w)
    np.testing.assert_allclose(via_cache, ref, atol=1e-12)
    np.testing.assert_allclose(evaluate_quadratic(rig, w), ref, atol=1e-12)


def test_h_row_is_gradient(small, small_cache, rng):
    rig = small.rig
    w = rng.uniform(0.1, 0.9, size=rig.m)
    step = 1e-6
    for i in (3, 120, 599):
        num = np.empty(rig.m)
        for j in range(rig.m):
            e = np.zeros(rig.m)
            e[j] = step
            num[j] = (evaluate_quadratic(rig, w + e)[i] - evaluate_quadratic(rig, w - e)[i]) / (2 * step)
        h = h_row(small_cache, rig, i, w)
        np.testing.assert_allclose(h, num, rtol=1e-6, atol=1e-8)
        np.testing.assert_allclose(h, rig.blendshapes[i] + 2 * w @ dense_d_matrix(small_cache, i),
                                   atol=1e-13)


@given(st.integers(0, 2**32 - 1))
def test_eigen_bounds_rayleigh_quotient(seed):
    # lambda_min <= x'Dx / x'x <= lambda_max for every nonzero x
    rng = np.random.default_rng(seed)
    m = 6
    pairs = sorted({tuple(sorted(rng.choice(m, 2, replace=False))) for _ in range(5)})
    rig = Rig(np.zeros(3), np.zeros((3, m)),
              corrections2=[(p, rng.normal(size=3)) for p in pairs])
    cache = build_cache(rig)
    x = rng.normal(size=m)
    for i in range(3):
        rq = x @ dense_d_matrix(cache, i) @ x / (x @ x)
        assert cache.lambda_min[i] - 1e-12 <= rq <= cache.lambda_max[i] + 1e-12
        assert cache.lambda_min[i] <= 0.0 <= cache.lambda_max[i]  # zero diagonal: trace 0
