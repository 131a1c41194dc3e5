"""Majorization-minimization solver for the quadratic-rig inverse problem.

The objective is::

    F(w) = ||f2(w) - target||^2 + lam * sum(w),   0 <= w <= 1

with ``f2`` the rig truncated after the pairwise corrections. Each iteration
replaces the fidelity term around the current ``w`` by a separable quartic
upper bound in the increment ``v``::

    p + q @ v + r * ||v||^2 + s * sum(v**4)

(the ``lam`` terms folded into ``p`` and ``q``) and minimizes it exactly, one
controller at a time, inside the box. ``p``, ``r`` and ``s`` are shared by all
controllers; only ``q`` differs.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from numba import njit

from .qp import QpProblem, prepare_operator, solve_qp
from .quartic import box_increments
from .rig import Rig, RigError, check_weights
from .spectral import QuadraticCache

__all__ = [
    "Init",
    "SolverConfig",
    "SolveReport",
    "Surrogate",
    "objective_quadratic",
    "surrogate_coefficients",
    "mm_step",
    "initial_weights",
    "solve",
]


class Init(str, enum.Enum):
    ZERO = "zero"
    PSEUDOINVERSE = "pseudoinverse"
    LINEAR = "linear"


@dataclass(frozen=True)
class SolverConfig:
    """Settings of one quadratic-model solve.

    ``lam`` is the L1 weight, ``eps`` the tolerance on the change of the
    objective between consecutive iterates and ``max_iters`` the iteration cap.
    """

    lam: float = 0.0
    eps: float = 1e-6
    max_iters: int = 200
    init: Init = Init.ZERO

    def __post_init__(self):
        object.__setattr__(self, "init", Init(self.init))
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lam must be a finite non-negative number, got {self.lam}")
        if not (np.isfinite(self.eps) and self.eps > 0):
            raise ValueError(f"eps must be positive, got {self.eps}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be a positive integer, got {self.max_iters}")


@dataclass
class SolveReport:
    weights: np.ndarray
    iterations: int
    objective_trace: list[float]
    converged: bool
    wall_time: float
    init_iterations: int = 0
    init: Init = Init.ZERO
    extra: dict = field(default_factory=dict)

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


class Surrogate(NamedTuple):
    """Coefficients of the separable majorizer at the current iterate."""

    p: float
    q: np.ndarray
    r: float
    s: float

    def value(self, v: np.ndarray) -> float:
        v2 = v * v
        return float(self.p + self.q @ v + self.r * np.sum(v2) + self.s * np.sum(v2 * v2))


def _check(rig: Rig, cache: QuadraticCache, w, target):
    w = check_weights(rig, w)
    target = np.asarray(target, dtype=np.float64)
    if target.shape != (rig.n_coords,):
        raise RigError(
            "target", f"length {target.size} does not match 3n = {rig.n_coords}"
        )
    if cache.m != rig.m or cache.n_coords != rig.n_coords:
        raise RigError("cache", "cache was built for a rig of different dimensions")
    return w, target


def _residual(cache: QuadraticCache, w, target) -> np.ndarray:
    return cache.operator @ cache.stacked(w) - target


def objective_quadratic(rig: Rig, cache: QuadraticCache, w, target, lam: float) -> float:
    """``||f2(w) - target||^2 + lam * sum(w)``."""
    w, target = _check(rig, cache, w, target)
    g = _residual(cache, w, target)
    return float(g @ g + lam * np.sum(w))


def _pair_jacobian(cache: QuadraticCache, w) -> np.ndarray:
    """``S`` with ``C @ S`` the pairwise part of the rig Jacobian (rows ``2 w @ D_i``)."""
    P = cache.n_pairs
    S = np.zeros((P, cache.m))
    if P:
        rows = np.arange(P)
        j, k = cache.pairs[:, 0], cache.pairs[:, 1]
        S[rows, j] = w[k]
        S[rows, k] = w[j]
    return S


@njit(cache=True)
def _residual_sums(g, lam_min, lam_max):
    """``sum g_i**2`` and ``sum g_i * lambda_M(D_i, g_i)``."""
    sq = 0.0
    spec = 0.0
    for i in range(g.shape[0]):
        gi = g[i]
        sq += gi * gi
        spec += gi * (lam_min[i] if gi < 0.0 else lam_max[i])
    return sq, spec


def _coefficients(cache: QuadraticCache, w, target, lam) -> Surrogate:
    m = cache.m
    g = _residual(cache, w, target)
    fidelity, spectral = _residual_sums(g, cache.lambda_min, cache.lambda_max)
    p = fidelity + lam * float(np.sum(w))

    # H.T @ g with H = B + C S, from one transposed pass over [B | C]
    back = cache.operator.T @ g
    Htg = back[:m]
    if cache.n_pairs:
        j, k = cache.pairs[:, 0], cache.pairs[:, 1]
        pc = back[m:]
        Htg = Htg + np.bincount(j, weights=w[k] * pc, minlength=m)
        Htg = Htg + np.bincount(k, weights=w[j] * pc, minlength=m)
    q = 2.0 * Htg + lam

    # sum_i ||h_i||^2 = ||B + C S||_F^2 expanded with the cached Gram blocks
    h_sq = cache.blend_sq_norm
    if cache.n_pairs:
        S = _pair_jacobian(cache, w)
        h_sq += 2.0 * float(np.sum(cache.blend_pair_gram * S.T))
        h_sq += float(np.sum(cache.pair_gram * (S @ S.T)))
    r = 2.0 * (spectral + h_sq)
    return Surrogate(p, q, r, cache.s_coefficient)


def surrogate_coefficients(
    rig: Rig, cache: QuadraticCache, w, target, lam: float
) -> Surrogate:
    """Coefficients ``(p, q, r, s)`` of the majorizer at ``w``.

    ``surrogate.value(v)`` upper-bounds ``objective_quadratic(w + v)`` for every
    ``v`` and matches it at ``v = 0``. ``q - lam`` is the gradient of the
    fidelity term at ``w``.
    """
    w, target = _check(rig, cache, w, target)
    return _coefficients(cache, w, target, float(lam))


def _step(cache: QuadraticCache, w, sur: Surrogate) -> np.ndarray:
    v = box_increments(sur.p, sur.q, sur.r, sur.s, w)
    return np.clip(w + v, 0.0, 1.0)


def mm_step(rig: Rig, cache: QuadraticCache, w, target, config: SolverConfig) -> np.ndarray:
    """One majorize-minimize update ``w + v_hat``; the result is always feasible."""
    w, target = _check(rig, cache, w, target)
    return _step(cache, w, _coefficients(cache, w, target, float(config.lam)))


@lru_cache(maxsize=8)
def _pinv(cache: QuadraticCache) -> np.ndarray:
    # discards singular values below 1e-10 * max
    return np.linalg.pinv(cache.blendshapes, rtol=1e-10)


@lru_cache(maxsize=8)
def _qp_operator(cache: QuadraticCache):
    return prepare_operator(cache.blendshapes)


def linear_operator(cache: QuadraticCache):
    """Gram matrix and Lipschitz constant of the linear baseline (memoized per cache)."""
    return _qp_operator(cache)


def initial_weights(rig: Rig, cache: QuadraticCache, target, config: SolverConfig):
    """Starting point for :func:`solve` and the baseline iterations it took."""
    init = Init(config.init)
    if init is Init.ZERO:
        return np.zeros(rig.m), 0
    if init is Init.PSEUDOINVERSE:
        return np.clip(_pinv(cache) @ target, 0.0, 1.0), 0
    res = solve_qp(
        QpProblem(rig.blendshapes, target, config.lam, operator=_qp_operator(cache))
    )
    return res.w, res.iterations


def solve(
    rig: Rig,
    cache: QuadraticCache,
    target,
    config: SolverConfig = SolverConfig(),
    *,
    w0=None,
    callback: Callable[[int, np.ndarray], None] | None = None,
) -> SolveReport:
    """Fit ``target`` with the quadratic rig.

    Iterates :func:`mm_step` from the initial point chosen by ``config.init``
    (or ``w0`` when given) until the objective changes by less than
    ``config.eps`` between consecutive iterates, or ``config.max_iters`` steps.

    ``callback(t, w)`` is invoked for the initial point (``t = 0``) and after
    every step.
    """
    if not isinstance(config, SolverConfig):
        raise TypeError("config must be a SolverConfig")
    target = np.asarray(target, dtype=np.float64)
    start = time.perf_counter()
    if w0 is None:
        w, init_iters = initial_weights(rig, cache, target, config)
    else:
        w, init_iters = np.array(w0, dtype=np.float64), 0
    w, target = _check(rig, cache, w, target)
    lam = float(config.lam)

    if callback is not None:
        callback(0, w)
    sur = _coefficients(cache, w, target, lam)
    trace = [sur.p]
    converged = False
    t = 0
    while t < config.max_iters:
        w = _step(cache, w, sur)
        t += 1
        if callback is not None:
            callback(t, w)
        sur = _coefficients(cache, w, target, lam)
        trace.append(sur.p)
        if abs(trace[-2] - trace[-1]) < config.eps:
            converged = True
            break

    return SolveReport(
        weights=w,
        iterations=t,
        objective_trace=trace,
        converged=converged,
        wall_time=time.perf_counter() - start,
        init_iterations=init_iters,
        init=Init(config.init),
    )
