"""Global minimization of ``p + q v + r v**2 + s v**4`` over an interval.

The derivative ``q + 2 r v + 4 s v**3`` is a depressed cubic, so its real roots
are available in closed form. The constrained minimizer is the best of the
in-interval stationary points and the two endpoints.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from numba import njit

__all__ = [
    "QuarticProblem",
    "QuarticContractError",
    "cubic_roots_depressed",
    "minimize_quartic",
    "minimize_quartic_batch",
    "box_increments",
]


class QuarticContractError(ValueError):
    pass


class QuarticProblem(NamedTuple):
    p: float
    q: float
    r: float
    s: float
    lo: float
    hi: float


@njit(cache=True)
def _polish(x, a1, a0):
    # guarded Newton steps; a root near zero can need a few to gain relative accuracy
    f = x * x * x + a1 * x + a0
    for _ in range(6):
        df = 3.0 * x * x + a1
        if f == 0.0 or df == 0.0:
            break
        cand = x - f / df
        fc = cand * cand * cand + a1 * cand + a0
        if not (math.isfinite(cand) and abs(fc) <= abs(f)) or cand == x:
            break
        x, f = cand, fc
    return x


@njit(cache=True)
def _cubic_roots(a1, a0, out):
    """Write the real roots of ``v**3 + a1 v + a0`` into ``out``; return their count."""
    if a1 == 0.0 and a0 == 0.0:
        out[0] = 0.0
        return 1
    # substitute v = 2**e u with O(1) coefficients so that the discriminant
    # neither underflows nor overflows; power-of-two scaling is exact
    b1, b0 = a1, a0
    size = max(abs(a0) ** (1.0 / 3.0), math.sqrt(abs(a1)))
    e = math.frexp(size)[1]
    a1 = math.ldexp(a1, -2 * e)
    a0 = math.ldexp(a0, -3 * e)
    half = 0.5 * a0
    third = a1 / 3.0
    disc = half * half + third * third * third
    if disc < 0.0:
        # three distinct real roots, trigonometric form (a1 < 0 here)
        amp = 2.0 * math.sqrt(-third)
        arg = (3.0 * a0 / (2.0 * a1)) * math.sqrt(-3.0 / a1)
        arg = min(1.0, max(-1.0, arg))
        phi = math.acos(arg) / 3.0
        for k in range(3):
            out[k] = _polish(amp * math.cos(phi - 2.0 * math.pi * k / 3.0), a1, a0)
        count = 3
    elif disc == 0.0 and a1 != 0.0:
        # simple root and a double root
        out[0] = _polish(3.0 * a0 / a1, a1, a0)
        out[1] = _polish(-1.5 * a0 / a1, a1, a0)
        count = 2
    else:
        # one real root, hyperbolic form
        if a1 > 0.0:
            c = math.sqrt(third)
            root = -2.0 * c * math.sinh(math.asinh((3.0 * a0 / (2.0 * a1)) / c) / 3.0)
        elif a1 < 0.0:
            c = math.sqrt(-third)
            ratio = max(1.0, (3.0 * abs(a0) / (-2.0 * a1)) / c)
            root = -2.0 * math.copysign(1.0, a0) * c * math.cosh(math.acosh(ratio) / 3.0)
        else:
            root = -math.copysign(abs(a0) ** (1.0 / 3.0), a0)
        if not math.isfinite(root):
            root = -math.copysign(abs(a0) ** (1.0 / 3.0), a0)
        out[0] = _polish(root, a1, a0)
        count = 1

    # back to the original scale, where a tiny a0 is not subnormal
    for i in range(count):
        out[i] = _polish(math.ldexp(out[i], e), b1, b0) + 0.0
    # sort ascending and drop repeats
    for i in range(1, count):
        j = i
        while j > 0 and out[j - 1] > out[j]:
            out[j - 1], out[j] = out[j], out[j - 1]
            j -= 1
    n = 0
    for i in range(count):
        if n == 0 or out[i] != out[n - 1]:
            out[n] = out[i]
            n += 1
    return n


@njit(cache=True)
def _quartic_value(p, q, r, s, v):
    v2 = v * v
    return p + q * v + r * v2 + s * v2 * v2


@njit(cache=True)
def _minimize_one(p, q, r, s, lo, hi):
    cand = np.empty(5)
    roots = np.empty(3)
    n = 0
    cand[n] = lo
    n += 1
    a1 = r / (2.0 * s) if s > 0.0 else math.inf
    a0 = q / (4.0 * s) if s > 0.0 else math.inf
    if math.isfinite(a1) and math.isfinite(a0):
        k = _cubic_roots(a1, a0, roots)
        for i in range(k):
            if lo <= roots[i] <= hi:
                cand[n] = roots[i]
                n += 1
    elif r != 0.0:
        # s == 0, or so small that the cubic's roots lie far outside any box
        v = -q / (2.0 * r)
        if lo <= v <= hi:
            cand[n] = v
            n += 1
    cand[n] = hi
    n += 1

    best_v = 0.0
    best_val = math.inf
    for i in range(n):
        v = min(hi, max(lo, cand[i]))
        val = _quartic_value(p, q, r, s, v)
        # ties go to the smaller v
        if val < best_val or (val == best_val and v < best_v):
            best_v = v
            best_val = val
    return best_v + 0.0, best_val


@njit(cache=True)
def _minimize_many(p, q, r, s, lo, hi, v_out, val_out):
    for j in range(q.shape[0]):
        v_out[j], val_out[j] = _minimize_one(p[j], q[j], r[j], s[j], lo[j], hi[j])


@njit(cache=True)
def _box_increments(p, q, r, s, w, v_out):
    for j in range(q.shape[0]):
        v_out[j] = _minimize_one(p, q[j], r, s, -w[j], 1.0 - w[j])[0]


def box_increments(p: float, q: np.ndarray, r: float, s: float, w: np.ndarray) -> np.ndarray:
    """Per-controller minimizers over ``[-w_j, 1 - w_j]`` with shared ``p, r, s``."""
    q = np.ascontiguousarray(q, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    if not (math.isfinite(p) and math.isfinite(r) and math.isfinite(s) and np.all(np.isfinite(q))):
        raise QuarticContractError("quartic coefficients must be finite")
    if s < 0.0:
        raise QuarticContractError("quartic coefficient s must be non-negative")
    v = np.empty(q.shape[0])
    _box_increments(float(p), q, float(r), float(s), w, v)
    return v


def _validate(p, q, r, s, lo, hi):
    if not all(np.all(np.isfinite(x)) for x in (p, q, r, s, lo, hi)):
        raise QuarticContractError("quartic coefficients and bounds must be finite")
    if np.any(s < 0.0):
        raise QuarticContractError("quartic coefficient s must be non-negative")
    if np.any(lo > hi):
        raise QuarticContractError("interval is empty (lo > hi)")


def minimize_quartic_batch(p, q, r, s, lo, hi):
    """Vectorized :func:`minimize_quartic`.

    All arguments broadcast against each other. Returns ``(v_star, value)``
    arrays. Among minimizers of equal value the smallest ``v`` is returned.
    """
    args = np.broadcast_arrays(
        *(np.atleast_1d(np.asarray(x, dtype=np.float64)) for x in (p, q, r, s, lo, hi))
    )
    args = [np.ascontiguousarray(a) for a in args]
    _validate(*args)
    v = np.empty(args[0].shape)
    val = np.empty(args[0].shape)
    _minimize_many(*args, v, val)
    return v, val


def minimize_quartic(prob: QuarticProblem | None = None, **kwargs) -> tuple[float, float]:
    """Global minimizer of ``p + q v + r v**2 + s v**4`` on ``[lo, hi]``.

    Accepts a :class:`QuarticProblem` or the six coefficients as keywords.

    Examples
    --------
    >>> minimize_quartic(QuarticProblem(0.0, 0.0, -2.0, 1.0, -2.0, 2.0))
    (-1.0, -1.0)
    """
    if prob is None:
        prob = QuarticProblem(**kwargs)
    prob = QuarticProblem(*(float(x) for x in prob))
    _validate(*(np.float64(x) for x in prob))
    return _minimize_one(*prob)


def cubic_roots_depressed(a1: float, a0: float) -> list[float]:
    """Real roots of ``v**3 + a1 v + a0 = 0``, ascending, without repeats.

    Closed form (trigonometric for three real roots, hyperbolic for one), each
    root polished by Newton's method.
    """
    a1, a0 = float(a1), float(a0)
    if not (math.isfinite(a1) and math.isfinite(a0)):
        raise QuarticContractError("cubic coefficients must be finite")
    out = np.empty(3)
    n = _cubic_roots(a1, a0, out)
    return [float(x) for x in out[:n]]
