"""Full GMRES with right preconditioning."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Knuth's MMIX 64-bit LCG: state <- a * state + c  (mod 2^64)
LCG_MULTIPLIER = 6364136223846793005
LCG_INCREMENT = 1442695040888963407
_MASK64 = (1 << 64) - 1


@dataclass
class SolveReport:
    iterations: int
    residual_history: np.ndarray
    converged: bool
    final_true_residual: float
    orthogonality_defect: float = 0.0
    # ||b - A x0||, before relative scaling
    initial_residual: float = field(default=0.0)


def _as_operator(op):
    if op is None:
        return lambda v: np.array(v, dtype=float, copy=True)
    if callable(op) and not hasattr(op, "shape"):
        return op
    if hasattr(op, "apply"):
        return op.apply
    return lambda v: op @ v


def gmres_right(A, M_inv, b, x0=None, tol=1e-6, maxit=500, residual_norm="initial"):
    """Solve ``A x = b`` by GMRES on ``A M^{-1} y = r0``, ``x = x0 + M^{-1} y``.

    Arnoldi uses modified Gram-Schmidt; the least-squares residual is tracked
    with Givens rotations.  Iteration stops at the first ``k`` with
    ``||b - A x_k|| / ||b - A x0|| <= tol``, or relative to ``||b||`` when
    ``residual_norm="rhs"``.  No restart.
    """
    if residual_norm not in ("initial", "rhs"):
        raise ValueError(f"residual_norm must be 'initial' or 'rhs', got {residual_norm!r}")
    if maxit < 1:
        raise ValueError("maxit must be at least 1")
    apply_A = _as_operator(A)
    apply_M = _as_operator(M_inv)
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    if x0.shape != b.shape:
        raise ValueError(f"x0 has shape {x0.shape}, rhs has {b.shape}")

    r0 = b - apply_A(x0)
    beta = float(np.linalg.norm(r0))
    if beta == 0.0:
        return x0.copy(), SolveReport(0, np.array([0.0]), True, 0.0, 0.0, 0.0)

    V = np.zeros((n, maxit + 1))
    H = np.zeros((maxit + 1, maxit))
    cs = np.zeros(maxit)
    sn = np.zeros(maxit)
    g = np.zeros(maxit + 1)
    g[0] = beta
    V[:, 0] = r0 / beta
    ref = beta
    if residual_norm == "rhs":
        ref = float(np.linalg.norm(b)) or beta
    history = [beta / ref]
    converged = False
    k = 0
    for j in range(maxit):
        w = apply_A(apply_M(V[:, j]))
        for i in range(j + 1):
            H[i, j] = V[:, i] @ w
            w -= H[i, j] * V[:, i]
        h_next = float(np.linalg.norm(w))
        H[j + 1, j] = h_next
        for i in range(j):
            t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
            H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
            H[i, j] = t
        denom = math.hypot(H[j, j], H[j + 1, j])
        cs[j], sn[j] = H[j, j] / denom, H[j + 1, j] / denom
        H[j, j] = denom
        H[j + 1, j] = 0.0
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]
        k = j + 1
        rel = abs(g[j + 1]) / ref
        # happy breakdown: the Krylov space is invariant, the solution is exact
        breakdown = h_next <= 1e-14 * denom
        history.append(0.0 if breakdown else rel)
        if breakdown or rel <= tol:
            converged = True
            break
        V[:, j + 1] = w / h_next

    y = np.linalg.solve(np.triu(H[:k, :k]), g[:k]) if k else np.zeros(0)
    x = x0 + apply_M(V[:, :k] @ y)
    true_res = float(np.linalg.norm(b - apply_A(x))) / ref
    Vk = V[:, :k]
    ortho = float(np.abs(Vk.T @ Vk - np.eye(k)).max()) if k else 0.0
    return x, SolveReport(k, np.asarray(history), converged, true_res, ortho, beta)


def lcg_uniform(n: int, seed: int) -> np.ndarray:
    """``n`` draws in ``[0, 1)`` from the top 53 bits of the MMIX LCG seeded with ``seed``."""
    state = int(seed) & _MASK64
    out = np.empty(n)
    for i in range(n):
        state = (LCG_MULTIPLIER * state + LCG_INCREMENT) & _MASK64
        out[i] = (state >> 11) * (1.0 / (1 << 53))
    return out


def random_initial_guess(n: int, seed: int = 0) -> np.ndarray:
    """Uniform entries in ``[-1, 1)``, reproducible on any platform."""
    return 2.0 * lcg_uniform(n, seed) - 1.0
