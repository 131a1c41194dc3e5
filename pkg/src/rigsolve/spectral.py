"""Per-coordinate quadratic forms of the pairwise corrections.

For every mesh coordinate ``i`` the pairwise corrective terms define a symmetric
``m x m`` matrix ``D_i`` with ``D_i[j, k] = D_i[k, j] = c_i / 2`` for each pair
``(j, k)`` whose correction has value ``c_i`` at that coordinate, so that the
pairwise contribution to coordinate ``i`` equals ``w @ D_i @ w``. The matrices
are never stored; only their extreme eigenvalues, which the majorizer needs and
which depend on the character alone.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .rig import Rig, RigError

__all__ = ["QuadraticCache", "build_cache", "quad_form", "h_row", "dense_d_matrix"]

# below this fill ratio the stacked forward operator is kept in CSC form
_SPARSE_OPERATOR_DENSITY = 0.3
_EIG_BATCH = 2048


@dataclass(frozen=True, eq=False)
class QuadraticCache:
    """Spectral data and precomputed products for one rig.

    Attributes
    ----------
    blendshapes : ndarray, shape (3n, m)
        The rig's blendshape matrix (shared, read-only).
    pairs : ndarray, shape (P, 2)
        Controller pairs with a corrective blendshape.
    pair_vectors : ndarray, shape (3n, P)
        The pairwise correction vectors (shared with the rig, read-only).
    lambda_min, lambda_max, sigma_max : ndarray, shape (3n,)
        Extreme eigenvalues and spectral norm of each ``D_i``.
    s_coefficient : float
        ``2 m sum_i sigma_max[i]**2``, the quartic coefficient of the surrogate.
    involved_controllers : ndarray
        Sorted controllers that appear in at least one pair.
    operator : ndarray or scipy.sparse.csc_matrix, shape (3n, m + P)
        ``[B | C]`` so that ``operator @ concat(w, pair products)`` is the
        quadratic rig.
    blend_sq_norm : float
        Squared Frobenius norm of ``B``.
    blend_pair_gram : ndarray, shape (m, P)
        ``B.T @ C``.
    pair_gram : ndarray, shape (P, P)
        ``C.T @ C``.
    """

    m: int
    blendshapes: np.ndarray
    pairs: np.ndarray
    pair_vectors: np.ndarray
    lambda_min: np.ndarray
    lambda_max: np.ndarray
    sigma_max: np.ndarray
    s_coefficient: float
    involved_controllers: np.ndarray
    operator: object
    blend_sq_norm: float
    blend_pair_gram: np.ndarray
    pair_gram: np.ndarray

    @property
    def n_coords(self) -> int:
        return self.pair_vectors.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.pairs.shape[0]

    def pair_products(self, w: np.ndarray) -> np.ndarray:
        return w[self.pairs[:, 0]] * w[self.pairs[:, 1]]

    def stacked(self, w: np.ndarray) -> np.ndarray:
        return np.concatenate([w, self.pair_products(w)])


def _coordinate_spectra(pairs: np.ndarray, C: np.ndarray, m: int):
    n_coords = C.shape[0]
    lam_min = np.zeros(n_coords)
    lam_max = np.zeros(n_coords)
    if pairs.shape[0] == 0:
        return lam_min, lam_max

    rows = sp.csr_matrix(C)
    # group coordinates by the size of their active submatrix so that the
    # eigenvalue problems can be solved in stacked batches
    groups = defaultdict(list)
    for i in range(n_coords):
        lo, hi = rows.indptr[i], rows.indptr[i + 1]
        if lo == hi:
            continue
        ids = rows.indices[lo:hi]
        ctrl = np.unique(pairs[ids])
        local = np.searchsorted(ctrl, pairs[ids])
        groups[ctrl.size].append((i, local, 0.5 * rows.data[lo:hi]))

    for k in sorted(groups):
        members = groups[k]
        for start in range(0, len(members), _EIG_BATCH):
            chunk = members[start:start + _EIG_BATCH]
            mats = np.zeros((len(chunk), k, k))
            for t, (_, local, half) in enumerate(chunk):
                mats[t, local[:, 0], local[:, 1]] = half
                mats[t, local[:, 1], local[:, 0]] = half
            eig = np.linalg.eigvalsh(mats)
            idx = np.array([i for i, _, _ in chunk])
            lam_min[idx] = eig[:, 0]
            lam_max[idx] = eig[:, -1]
            if k < m:
                # rows of D_i outside the submatrix are zero
                lam_min[idx] = np.minimum(lam_min[idx], 0.0)
                lam_max[idx] = np.maximum(lam_max[idx], 0.0)
    return lam_min, lam_max


def build_cache(rig: Rig) -> QuadraticCache:
    """Precompute everything the quadratic solver reuses across frames."""
    if not isinstance(rig, Rig):
        raise RigError("rig", "expected a Rig instance")
    table = rig.corrections2
    pairs = table.controllers
    C = table.vectors
    m = rig.m
    B = rig.blendshapes

    lam_min, lam_max = _coordinate_spectra(pairs, C, m)
    sigma = np.maximum(np.abs(lam_min), np.abs(lam_max))
    s_coef = float(2.0 * m * np.sum(sigma**2))

    stacked = np.asfortranarray(np.hstack([B, C]))
    density = np.count_nonzero(stacked) / max(stacked.size, 1)
    operator = sp.csc_matrix(stacked) if density < _SPARSE_OPERATOR_DENSITY else stacked

    for arr in (lam_min, lam_max, sigma):
        arr.setflags(write=False)
    involved = np.unique(pairs) if len(pairs) else np.zeros(0, dtype=np.int64)
    return QuadraticCache(
        m=m,
        blendshapes=B,
        pairs=pairs,
        pair_vectors=C,
        lambda_min=lam_min,
        lambda_max=lam_max,
        sigma_max=sigma,
        s_coefficient=s_coef,
        involved_controllers=involved,
        operator=operator,
        blend_sq_norm=float(np.sum(B * B)),
        blend_pair_gram=B.T @ C,
        pair_gram=C.T @ C,
    )


def quad_form(cache: QuadraticCache, i: int, w) -> float:
    """``w @ D_i @ w`` evaluated from the pair list."""
    w = np.asarray(w, dtype=np.float64)
    if cache.n_pairs == 0:
        return 0.0
    return float(cache.pair_vectors[i] @ cache.pair_products(w))


def h_row(cache: QuadraticCache, rig: Rig, i: int, w) -> np.ndarray:
    """Gradient of coordinate ``i`` of the quadratic rig, ``B_i + 2 w @ D_i``."""
    w = np.asarray(w, dtype=np.float64)
    h = np.array(rig.blendshapes[i], dtype=np.float64)
    if cache.n_pairs:
        c = cache.pair_vectors[i]
        j, k = cache.pairs[:, 0], cache.pairs[:, 1]
        np.add.at(h, j, w[k] * c)
        np.add.at(h, k, w[j] * c)
    return h


def dense_d_matrix(cache: QuadraticCache, i: int) -> np.ndarray:
    """Materialize ``D_i`` as a dense matrix (diagnostics and tests)."""
    D = np.zeros((cache.m, cache.m))
    if cache.n_pairs:
        half = 0.5 * cache.pair_vectors[i]
        j, k = cache.pairs[:, 0], cache.pairs[:, 1]
        D[j, k] += half
        D[k, j] += half
    return D
