"""Blendshape rig data model and forward evaluation.

All meshes handled here are neutral-relative: the neutral face is stored on the
rig for IO purposes but never added to an evaluation result.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RigError",
    "CorrectionTable",
    "Rig",
    "evaluate_full",
    "evaluate_quadratic",
    "evaluate_linear",
    "residual_g",
    "check_weights",
]


class RigError(ValueError):
    """Invalid rig data or a dimension mismatch.

    Parameters
    ----------
    field : str
        Name of the offending field, e.g. ``"w"`` or ``"corrections3"``.
    message : str
        Human readable description.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class CorrectionTable:
    """Corrective blendshapes of one order.

    ``controllers`` has shape ``(k, order)`` with strictly ascending rows and
    ``vectors`` has shape ``(3n, k)``; column ``c`` is the correction activated
    by the product of the weights listed in row ``c``.
    """

    order: int
    controllers: np.ndarray
    vectors: np.ndarray

    def __len__(self) -> int:
        return self.controllers.shape[0]

    def items(self) -> list[tuple[tuple[int, ...], np.ndarray]]:
        return [
            (tuple(int(c) for c in row), self.vectors[:, k])
            for k, row in enumerate(self.controllers)
        ]

    def activations(self, w: np.ndarray) -> np.ndarray:
        """Products of the weights named by each tuple."""
        if len(self) == 0:
            return np.zeros(0)
        return np.prod(w[self.controllers], axis=1)


def _make_table(
    order: int, entries, n_coords: int, m: int, name: str
) -> CorrectionTable:
    if isinstance(entries, CorrectionTable):
        entries = entries.items()
    entries = list(entries or [])
    idx = np.zeros((len(entries), order), dtype=np.int64)
    vecs = np.zeros((n_coords, len(entries)), order="F")
    seen = set()
    for c, (tup, vec) in enumerate(entries):
        tup = tuple(int(t) for t in tup)
        if len(tup) != order:
            raise RigError(name, f"tuple {tup} does not have {order} controllers")
        if any(a >= b for a, b in zip(tup, tup[1:])):
            raise RigError(name, f"tuple {tup} is not strictly ascending")
        if tup[0] < 0 or tup[-1] >= m:
            raise RigError(name, f"tuple {tup} has controllers outside [0, {m})")
        if tup in seen:
            raise RigError(name, f"duplicate tuple {tup}")
        seen.add(tup)
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (n_coords,):
            raise RigError(
                name, f"correction for {tup} has length {vec.size}, expected {n_coords}"
            )
        if not np.all(np.isfinite(vec)):
            raise RigError(name, f"correction for {tup} has non-finite entries")
        idx[c] = tup
        vecs[:, c] = vec
    idx.setflags(write=False)
    vecs.setflags(write=False)
    return CorrectionTable(order, idx, vecs)


@dataclass(frozen=True)
class Rig:
    """A blendshape rig with corrective terms of order 2, 3 and 4.

    Parameters
    ----------
    neutral : array_like, shape (3n,)
        Neutral face, interleaved ``x, y, z`` per vertex.
    blendshapes : array_like, shape (3n, m)
        Blendshape matrix; stored column-major.
    corrections2, corrections3, corrections4 : iterable of (tuple, vector)
        Corrective blendshapes keyed by strictly ascending controller tuples.
        A :class:`CorrectionTable` is accepted as well.

    The rig is immutable after construction.
    """

    neutral: np.ndarray
    blendshapes: np.ndarray
    corrections2: CorrectionTable = field(default=None)
    corrections3: CorrectionTable = field(default=None)
    corrections4: CorrectionTable = field(default=None)

    def __post_init__(self):
        B = np.asarray(self.blendshapes, dtype=np.float64)
        if B.ndim != 2:
            raise RigError("blendshapes", f"expected a 2-D matrix, got ndim={B.ndim}")
        n_coords, m = B.shape
        if m < 1:
            raise RigError("blendshapes", "rig needs at least one controller")
        if n_coords < 3 or n_coords % 3:
            raise RigError(
                "blendshapes", f"row count {n_coords} is not a positive multiple of 3"
            )
        if not np.all(np.isfinite(B)):
            raise RigError("blendshapes", "non-finite entries")
        neutral = np.asarray(self.neutral, dtype=np.float64)
        if neutral.shape != (n_coords,):
            raise RigError(
                "neutral", f"length {neutral.size} does not match 3n = {n_coords}"
            )
        B = np.array(B, order="F")
        neutral = neutral.copy()
        B.setflags(write=False)
        neutral.setflags(write=False)
        object.__setattr__(self, "blendshapes", B)
        object.__setattr__(self, "neutral", neutral)
        for order in (2, 3, 4):
            name = f"corrections{order}"
            table = _make_table(order, getattr(self, name), n_coords, m, name)
            object.__setattr__(self, name, table)

    @property
    def n_coords(self) -> int:
        return self.blendshapes.shape[0]

    @property
    def n_vertices(self) -> int:
        return self.blendshapes.shape[0] // 3

    @property
    def m(self) -> int:
        return self.blendshapes.shape[1]

    def tables(self, max_order: int = 4) -> list[CorrectionTable]:
        return [
            getattr(self, f"corrections{o}") for o in range(2, max_order + 1)
        ]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Rig):
            return NotImplemented
        if not (
            np.array_equal(self.neutral, other.neutral)
            and np.array_equal(self.blendshapes, other.blendshapes)
        ):
            return False
        for a, b in zip(self.tables(), other.tables()):
            if not (
                np.array_equal(a.controllers, b.controllers)
                and np.array_equal(a.vectors, b.vectors)
            ):
                return False
        return True

    __hash__ = None


def check_weights(rig: Rig, w, *, feasible: bool = True) -> np.ndarray:
    """Return ``w`` as a float vector, validating its length and the box."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (rig.m,):
        raise RigError("w", f"length {w.size} does not match m = {rig.m}")
    if feasible and not (np.all(w >= 0.0) and np.all(w <= 1.0)):
        raise RigError("w", "weights must lie in [0, 1]")
    return w


def _check_target(rig: Rig, target) -> np.ndarray:
    target = np.asarray(target, dtype=np.float64)
    if target.shape != (rig.n_coords,):
        raise RigError(
            "target", f"length {target.size} does not match 3n = {rig.n_coords}"
        )
    return target


def _evaluate(rig: Rig, w, max_order: int) -> np.ndarray:
    w = check_weights(rig, w)
    out = rig.blendshapes @ w
    for table in rig.tables(max_order):
        if len(table):
            out += table.vectors @ table.activations(w)
    return out


def evaluate_full(rig: Rig, w) -> np.ndarray:
    """Neutral-relative mesh from the complete rig (all three correction levels)."""
    return _evaluate(rig, w, 4)


def evaluate_quadratic(rig: Rig, w) -> np.ndarray:
    """Mesh from the rig truncated after the pairwise corrections."""
    return _evaluate(rig, w, 2)


def evaluate_linear(rig: Rig, w) -> np.ndarray:
    """Mesh from the purely linear blendshape model ``B @ w``."""
    return rig.blendshapes @ check_weights(rig, w)


def residual_g(rig: Rig, w, target) -> np.ndarray:
    """Per-coordinate residual of the quadratic rig, ``f_quad(w) - target``."""
    target = _check_target(rig, target)
    return evaluate_quadratic(rig, w) - target
