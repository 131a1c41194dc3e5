"""Linear-rig baseline: ``min ||B w - b||^2 + lam * sum(w)`` over the unit box.

Inside the box the L1 penalty is the linear term ``lam * 1 @ w``, so the problem
is a smooth convex QP with bound constraints. It is solved by accelerated
projected gradient with a fixed ``1/L`` step and function-value restarts, all in
terms of the ``m x m`` Gram matrix so that an iteration costs ``O(m^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "QpProblem",
    "QpOperator",
    "QpResult",
    "prepare_operator",
    "solve_qp",
    "qp_objective",
    "projected_gradient_residual",
]


class QpOperator(NamedTuple):
    """Per-rig data shared by every frame: ``gram = B.T @ B`` and ``L``."""

    gram: np.ndarray
    lipschitz: float


@dataclass
class QpProblem:
    B: np.ndarray
    b_hat: np.ndarray
    lam: float = 0.0
    tol: float = 1e-8
    max_iters: int = 5000
    operator: QpOperator | None = field(default=None, repr=False)

    def __post_init__(self):
        self.B = np.asarray(self.B, dtype=np.float64)
        self.b_hat = np.asarray(self.b_hat, dtype=np.float64)
        if self.B.ndim != 2 or self.b_hat.shape != (self.B.shape[0],):
            raise ValueError(
                f"b_hat has shape {self.b_hat.shape}, expected ({self.B.shape[0]},)"
            )
        if not self.lam >= 0:
            raise ValueError("lam must be non-negative")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be at least 1")


class QpResult(NamedTuple):
    w: np.ndarray
    iterations: int
    converged: bool
    objective: float
    trace: list | None = None


def prepare_operator(B: np.ndarray) -> QpOperator:
    B = np.asarray(B, dtype=np.float64)
    gram = B.T @ B
    # exact symmetric eigenvalue; m is small
    top = float(np.linalg.eigvalsh(gram)[-1]) if gram.size else 0.0
    return QpOperator(gram, 2.0 * max(top, 0.0))


def _value(w, gram, c, lam):
    # the constant ||b||^2 is left out so that comparisons keep their precision
    return float(w @ (gram @ w) - 2.0 * (c @ w) + lam * np.sum(w))


def qp_objective(B, b_hat, w, lam) -> float:
    """``||B w - b_hat||^2 + lam * sum(w)``, evaluated directly."""
    r = np.asarray(B) @ w - b_hat
    return float(r @ r + lam * np.sum(w))


def projected_gradient_residual(w, grad) -> float:
    return float(np.max(np.abs(w - np.clip(w - grad, 0.0, 1.0)), initial=0.0))


def _polish(x, gram, c, lam):
    """Solve the equality-constrained problem on the current free set."""
    free = (x > 0.0) & (x < 1.0)
    if not np.any(free):
        return None
    y = np.where(x >= 1.0, 1.0, 0.0)
    rhs = c[free] - 0.5 * lam - gram[np.ix_(free, ~free)] @ y[~free]
    try:
        y[free] = np.linalg.solve(gram[np.ix_(free, free)], rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(y)):
        return None
    return np.clip(y, 0.0, 1.0)


def solve_qp(prob: QpProblem, *, record: bool = False, callback=None) -> QpResult:
    """Minimize the linear-rig objective over ``[0, 1]^m``.

    Starts from ``w = 0``. Stops when the projected-gradient residual
    ``||w - clip(w - grad F(w))||_inf`` drops to ``prob.tol``; otherwise the best
    iterate is returned with ``converged=False``.

    With ``record=True`` the objective after each iteration is returned in
    ``QpResult.trace``. ``callback(it, w)`` sees the start point and every
    accepted iterate.
    """
    op = prob.operator if prob.operator is not None else prepare_operator(prob.B)
    gram, L = op.gram, op.lipschitz
    lam = float(prob.lam)
    c = prob.B.T @ prob.b_hat
    const = float(prob.b_hat @ prob.b_hat)
    m = gram.shape[0]

    def grad_at(w):
        return 2.0 * (gram @ w - c) + lam

    x = np.zeros(m)
    if callback is not None:
        callback(0, x)
    fx = _value(x, gram, c, lam)
    trace = [fx + const] if record else None
    gx = grad_at(x)
    if projected_gradient_residual(x, gx) <= prob.tol:
        return QpResult(x, 0, True, fx + const, trace)
    if L == 0.0:
        # B == 0: objective is lam * sum(w), minimized at the origin
        return QpResult(x, 0, True, fx + const, trace)

    def decrease(new, old):
        # F(new) - F(old) written in terms of the difference for precision
        d = new - old
        return float(d @ (gram @ (new + old) - 2.0 * c + lam))

    y = x.copy()
    t = 1.0
    restarted = False
    converged = False
    it = 0
    for it in range(1, int(prob.max_iters) + 1):
        z = np.clip(y - grad_at(y) / L, 0.0, 1.0)
        delta = decrease(z, x)
        if delta > 0.0:
            if restarted:
                # a plain gradient step from x no longer decreases F: numerical floor
                cand = _polish(x, gram, c, lam)
                gain = decrease(cand, x) if cand is not None else 1.0
                if gain <= 0.0:
                    x, fx = cand, fx + gain
                    converged = projected_gradient_residual(x, grad_at(x)) <= prob.tol
                    if callback is not None:
                        callback(it, x)
                    if record:
                        trace.append(fx + const)
                break
            y = x.copy()
            t = 1.0
            restarted = True
            if record:
                trace.append(fx + const)
            continue
        restarted = False
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = z + ((t - 1.0) / t_next) * (z - x)
        x, fx, t = z, fx + delta, t_next

        if it % 25 == 0:
            cand = _polish(x, gram, c, lam)
            gain = decrease(cand, x) if cand is not None else 1.0
            if gain <= 0.0:
                # accumulate differences so the recorded trace never rises by rounding
                x, fx = cand, fx + gain
                y = x.copy()
                t = 1.0
        if callback is not None:
            callback(it, x)
        if record:
            trace.append(fx + const)
        if projected_gradient_residual(x, grad_at(x)) <= prob.tol:
            converged = True
            break

    if not converged:
        converged = projected_gradient_residual(x, grad_at(x)) <= prob.tol
    return QpResult(x, it, converged, qp_objective(prob.B, prob.b_hat, x, lam), trace)
