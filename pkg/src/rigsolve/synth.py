"""Reproducible synthetic rigs and animation sequences.

Blendshapes are localized: each one displaces a contiguous run of vertices
(normal random entries, zero elsewhere), so neighbouring blendshapes overlap.
Ground-truth animation curves are clamped sinusoids, which makes consecutive
frames coherent and each frame sparse.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from math import comb
from typing import NamedTuple

import numpy as np

from .rig import Rig, evaluate_full

__all__ = ["GenSpec", "SyntheticData", "generate", "PAPER_SCALE"]


@dataclass(frozen=True)
class GenSpec:
    n_vertices: int = 6012
    m: int = 100
    n_pairs: int = 150
    n_triples: int = 30
    n_quads: int = 10
    n_frames: int = 150
    sparsity: float = 0.15
    correction_scale: float = 0.5
    noise_std: float = 0.0
    seed: int = 0
    # fraction of the mesh one blendshape touches, drawn uniformly from this range
    support: tuple[float, float] = (0.04, 0.12)

    def validate(self) -> None:
        m = self.m
        if self.n_vertices < 1 or m < 1:
            raise ValueError("n_vertices and m must be positive")
        if self.n_frames < 1:
            raise ValueError("n_frames must be positive")
        for name, order in (("n_pairs", 2), ("n_triples", 3), ("n_quads", 4)):
            count = getattr(self, name)
            if count < 0:
                raise ValueError(f"{name} must be non-negative")
            if count > comb(m, order):
                raise ValueError(
                    f"{name}={count} exceeds the {comb(m, order)} possible tuples for m={m}"
                )
        if not 0.0 < self.sparsity <= 1.0:
            raise ValueError("sparsity must lie in (0, 1]")
        if self.correction_scale < 0 or self.noise_std < 0:
            raise ValueError("correction_scale and noise_std must be non-negative")
        lo, hi = self.support
        if not 0.0 < lo <= hi <= 1.0:
            raise ValueError("support must satisfy 0 < lo <= hi <= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["support"] = list(self.support)
        return d


PAPER_SCALE = GenSpec()


class SyntheticData(NamedTuple):
    rig: Rig
    weights: np.ndarray
    targets: np.ndarray


def _local_field(rng, n_vertices, length, start):
    """Standard normal displacements on ``length`` vertices starting at ``start``."""
    vec = np.zeros((n_vertices, 3))
    vec[start:start + length] = rng.normal(size=(length, 3))
    return vec.ravel()


def _sample_tuples(rng, m, order, count):
    total = comb(m, order)
    if count == 0:
        return []
    if 2 * count > total:
        from itertools import combinations

        pool = list(combinations(range(m), order))
        pick = rng.choice(total, size=count, replace=False)
        return sorted(pool[i] for i in pick)
    chosen = set()
    while len(chosen) < count:
        tup = tuple(sorted(int(x) for x in rng.choice(m, size=order, replace=False)))
        chosen.add(tup)
    return sorted(chosen)


def _trajectories(rng, spec: GenSpec) -> np.ndarray:
    m, n_frames, s = spec.m, spec.n_frames, spec.sparsity
    t = np.arange(n_frames)
    period = rng.uniform(30.0, 120.0, size=m)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=m)
    amp = rng.uniform(0.4, 1.4, size=m)
    # sin(theta) > cos(pi s) for a fraction s of the cycle
    thresh = np.cos(np.pi * s)
    wave = np.sin(2.0 * np.pi * t[:, None] / period[None, :] + phase[None, :])
    denom = max(1.0 - thresh, 1e-12)
    return np.clip(amp * (wave - thresh) / denom, 0.0, 1.0)


def generate(spec: GenSpec = PAPER_SCALE) -> SyntheticData:
    """Rig, ground-truth weights ``(n_frames, m)`` and targets ``(n_frames, 3n)``.

    Targets are neutral-relative and produced by the full rig, plus Gaussian
    noise of standard deviation ``spec.noise_std``. The output depends only on
    ``spec``.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n, m = spec.n_vertices, spec.m

    neutral = rng.normal(scale=50.0, size=3 * n)
    lo, hi = spec.support
    starts = np.empty(m, dtype=np.int64)
    lengths = np.empty(m, dtype=np.int64)
    B = np.zeros((3 * n, m), order="F")
    for j in range(m):
        length = int(np.clip(round(rng.uniform(lo, hi) * n), 1, n))
        start = int(rng.integers(0, n - length + 1))
        starts[j], lengths[j] = start, length
        B[:, j] = _local_field(rng, n, length, start)
    mean_norm = float(np.mean(np.linalg.norm(B, axis=0)))

    corrections = {}
    for order, count in ((2, spec.n_pairs), (3, spec.n_triples), (4, spec.n_quads)):
        entries = []
        for tup in _sample_tuples(rng, m, order, count):
            # corrections live where one of their blendshapes acts
            owner = tup[int(rng.integers(0, order))]
            vec = _local_field(rng, n, int(lengths[owner]), int(starts[owner]))
            norm = np.linalg.norm(vec)
            if norm > 0:
                vec *= spec.correction_scale * mean_norm / norm
            entries.append((tup, vec))
        corrections[order] = entries

    rig = Rig(neutral, B, corrections[2], corrections[3], corrections[4])
    weights = _trajectories(rng, spec)
    targets = np.empty((spec.n_frames, 3 * n))
    for f in range(spec.n_frames):
        targets[f] = evaluate_full(rig, weights[f])
    if spec.noise_std > 0:
        targets += rng.normal(scale=spec.noise_std, size=targets.shape)
    return SyntheticData(rig, weights, targets)
