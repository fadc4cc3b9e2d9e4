"""Matrix-free restarted GMRES for the implicit solves.

The solver sees operators only through an apply callback, reports what it
actually achieved, and is deterministic: modified Gram-Schmidt Arnoldi with
Givens rotations and no randomized or threaded steps, so identical inputs
give bitwise-identical iterates on one platform.

Tolerances are relative to ``max(1, ||b||)``.  An optional right
preconditioner (another apply callback approximating the inverse) leaves
the reported residual in the original system.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class SolveError(RuntimeError):
    """Hard failure inside a linear solve (non-finite operator output)."""


@dataclass(frozen=True)
class LinearOperator:
    """Matrix-free 'apply to a vector' contract."""

    shape_n: int
    apply: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        y = self.apply(x)
        if y.shape != (self.shape_n,):
            raise SolveError(f"operator returned shape {y.shape}, expected ({self.shape_n},)")
        return y


def affine_to_linear(apply_affine: Callable[[np.ndarray], np.ndarray],
                     n: int, b: np.ndarray):
    """Split an affine map ``x -> L x + c`` into ``(L, b - c)``.

    Boundary policies like frozen ghosts make the raw operator affine; the
    constant part belongs on the right-hand side of the linear system.
    """
    c = apply_affine(np.zeros(n))
    op = LinearOperator(n, lambda x: apply_affine(x) - c)
    return op, b - c


@dataclass
class SolveReport:
    iterations: int
    residual: float
    converged: bool
    tol: float = 0.0


def gmres_solve(op: LinearOperator, b: np.ndarray, x0: np.ndarray | None = None,
                tol: float = 1e-12, restart: int = 40, maxiter: int = 1000,
                precond: Callable[[np.ndarray], np.ndarray] | None = None):
    """Restarted GMRES; returns ``(x, SolveReport)``.

    Convergence means ``||b - A x|| <= tol * max(1, ||b||)``.  An exact
    initial guess returns after the residual check alone.  Arnoldi
    breakdown (zero subspace growth) triggers a final residual check and a
    truthful non-converged report if that check fails; NaN or Inf in the
    operator output raises :class:`SolveError`.
    """
    n = b.shape[0]
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    x = np.zeros(n) if x0 is None else x0.astype(float).copy()
    target = tol * max(1.0, float(np.linalg.norm(b)))

    def residual_norm(xv):
        return float(np.linalg.norm(b - op(xv)))

    res = residual_norm(x)
    total_iters = 0
    if res <= target:
        return x, SolveReport(0, res, True, tol)

    m = max(1, restart)
    while total_iters < maxiter:
        r = b - op(x)
        beta = float(np.linalg.norm(r))
        if beta <= target:
            return x, SolveReport(total_iters, beta, True, tol)
        V = np.zeros((m + 1, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        k_used = 0
        for k in range(m):
            if total_iters >= maxiter:
                break
            z = V[k] if precond is None else precond(V[k])
            w = op(z)
            if not np.all(np.isfinite(w)):
                raise SolveError("non-finite value in operator application")
            # modified Gram-Schmidt
            for j in range(k + 1):
                H[j, k] = float(V[j] @ w)
                w = w - H[j, k] * V[j]
            H[k + 1, k] = float(np.linalg.norm(w))
            total_iters += 1
            breakdown = H[k + 1, k] <= 1e-300
            if not breakdown:
                V[k + 1] = w / H[k + 1, k]
            # apply accumulated Givens rotations to the new column
            for j in range(k):
                t = cs[j] * H[j, k] + sn[j] * H[j + 1, k]
                H[j + 1, k] = -sn[j] * H[j, k] + cs[j] * H[j + 1, k]
                H[j, k] = t
            denom = np.hypot(H[k, k], H[k + 1, k])
            if denom == 0.0:
                cs[k], sn[k] = 1.0, 0.0
            else:
                cs[k], sn[k] = H[k, k] / denom, H[k + 1, k] / denom
            H[k, k] = cs[k] * H[k, k] + sn[k] * H[k + 1, k]
            H[k + 1, k] = 0.0
            g[k + 1] = -sn[k] * g[k]
            g[k] = cs[k] * g[k]
            k_used = k + 1
            if abs(g[k + 1]) <= target or breakdown:
                break
        if k_used == 0:
            break
        y = np.zeros(k_used)
        for i in range(k_used - 1, -1, -1):
            y[i] = (g[i] - H[i, i + 1:k_used] @ y[i + 1:k_used]) / H[i, i]
        update = V[:k_used].T @ y
        x = x + (update if precond is None else precond(update))
        res = residual_norm(x)
        if res <= target:
            return x, SolveReport(total_iters, res, True, tol)
    res = residual_norm(x)
    return x, SolveReport(total_iters, res, res <= target, tol)
