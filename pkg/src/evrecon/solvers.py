"""Iterative solvers: conjugate gradient for SPD systems and damped LSQR for
sparse least squares.

Both are written out rather than wrapped from scipy because the callers need
per-iteration hooks (energy traces), warm starts, and explicit breakdown
detection. Determinism: for fixed inputs the iterates are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BreakdownNonSPD
from .operators import SparseOperator


@dataclass
class SolveReport:
    iterations: int
    final_residual: float
    converged: bool


def cg_solve(matvec: Callable[[np.ndarray], np.ndarray], rhs: np.ndarray,
             x0: np.ndarray | None = None, tol: float = 1e-6,
             max_iter: int = 100,
             residual_history: list | None = None) -> tuple[np.ndarray, SolveReport]:
    """Conjugate gradient for a symmetric positive definite operator.

    Stops when ||A x - rhs|| <= tol * ||rhs|| or after max_iter iterations.
    Raises BreakdownNonSPD if a search direction has non-positive curvature,
    which means the operator is not SPD.
    """
    rhs = np.asarray(rhs, dtype=np.float64)
    x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=np.float64)
    r = rhs - matvec(x) if x.any() else rhs.copy()
    b_norm = float(np.linalg.norm(rhs))
    threshold = tol * b_norm
    rs = float(r @ r)
    if residual_history is not None:
        residual_history.append(math.sqrt(rs))
    if math.sqrt(rs) <= threshold:
        return x, SolveReport(0, _relative(math.sqrt(rs), b_norm), True)
    p = r.copy()
    it = 0
    for it in range(1, max_iter + 1):
        ap = matvec(p)
        p_ap = float(p @ ap)
        if p_ap <= 0.0:
            raise BreakdownNonSPD(f"curvature {p_ap} <= 0 at iteration {it}")
        alpha = rs / p_ap
        x += alpha * p
        r -= alpha * ap
        rs_new = float(r @ r)
        if residual_history is not None:
            residual_history.append(math.sqrt(rs_new))
        if math.sqrt(rs_new) <= threshold:
            return x, SolveReport(it, _relative(math.sqrt(rs_new), b_norm), True)
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x, SolveReport(it, _relative(math.sqrt(rs), b_norm), False)


def lsqr_solve(op: SparseOperator, rhs: np.ndarray, damp: float = 0.0,
               tol: float = 1e-6, max_iter: int = 100,
               callback: Callable[[np.ndarray], None] | None = None
               ) -> tuple[np.ndarray, SolveReport]:
    """Damped LSQR: approximately minimize ||op x - rhs||^2 + damp^2 ||x||^2.

    Golub-Kahan bidiagonalization with the usual plane-rotation updates.
    ``callback(x)`` is invoked once per iteration with the current iterate.
    The report carries the explicitly recomputed relative residual of the
    undamped system.
    """
    rhs = np.asarray(rhs, dtype=np.float64)
    n = op.n_cols
    x = np.zeros(n)
    b_norm = float(np.linalg.norm(rhs))
    if b_norm == 0.0:
        return x, SolveReport(0, 0.0, True)

    u = rhs.copy()
    beta = float(np.linalg.norm(u))
    u /= beta
    v = op.apply_transpose(u)
    alpha = float(np.linalg.norm(v))
    if alpha == 0.0:
        return x, SolveReport(0, 1.0, False)
    v /= alpha
    w = v.copy()

    phibar = beta
    rhobar = alpha
    anorm2 = 0.0
    res2 = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        # one Golub-Kahan step: new beta, then new alpha
        u = op.apply(v) - alpha * u
        beta = float(np.linalg.norm(u))
        anorm2 += alpha * alpha + beta * beta + damp * damp
        if beta > 0.0:
            u /= beta
            v = op.apply_transpose(u) - beta * v
            alpha = float(np.linalg.norm(v))
            if alpha > 0.0:
                v /= alpha
        else:
            alpha = 0.0

        if damp > 0.0:
            rhobar1 = math.hypot(rhobar, damp)
            cs1 = rhobar / rhobar1
            sn1 = damp / rhobar1
            psi = sn1 * phibar
            phibar = cs1 * phibar
            res2 += psi * psi
        else:
            rhobar1 = rhobar

        rho = math.hypot(rhobar1, beta)
        cs = rhobar1 / rho
        sn = beta / rho
        theta = sn * alpha
        rhobar = -cs * alpha
        phi = cs * phibar
        phibar = sn * phibar

        x += (phi / rho) * w
        w = v - (theta / rho) * w

        if callback is not None:
            callback(x)

        # ||r|| of the damped (augmented) system, and ||A^T r|| estimate
        rnorm = math.sqrt(phibar * phibar + res2)
        arnorm = alpha * abs(sn * phi)
        anorm = math.sqrt(anorm2)
        if rnorm <= tol * b_norm:
            converged = True
            break
        if anorm * rnorm > 0 and arnorm <= tol * anorm * rnorm:
            converged = True
            break
        if beta == 0.0 and alpha == 0.0:
            converged = True
            break

    true_res = float(np.linalg.norm(op.apply(x) - rhs))
    return x, SolveReport(it, _relative(true_res, b_norm), converged)


def _relative(value: float, scale: float) -> float:
    return value / scale if scale > 0 else value
