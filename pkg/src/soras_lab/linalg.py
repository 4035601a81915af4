"""Matrix kernels: CSR helpers, sparse LU for local solves, small dense
factorizations, and Lanczos for extreme eigenvalues.

CSR storage is :class:`scipy.sparse.csr_matrix`; the sparse LU is SuperLU
behind :class:`SparseLu`.  Cholesky, the Jacobi eigensolver and Lanczos are
written here so that they can serve as independent checks of the library
routines used on the large dense problems.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

PIVOT_RTOL = 1e-14


class SingularMatrixError(ArithmeticError):
    pass


class NotPositiveDefiniteError(ArithmeticError):
    pass


class LanczosNotConverged(RuntimeError):
    def __init__(self, msg, estimates):
        super().__init__(msg)
        self.estimates = estimates


def as_csr(A) -> sp.csr_matrix:
    A = sp.csr_matrix(A)
    A.sum_duplicates()
    A.sort_indices()
    return A


def spmv(A, x):
    x = np.asarray(x)
    if A.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: {A.shape} @ {x.shape}")
    return A @ x


class SparseLu:
    """LU factorization with row partial pivoting and natural column order.

    Raises :class:`SingularMatrixError` when a pivot falls below
    ``1e-14 * max|A_ij|``.
    """

    def __init__(self, A):
        A = sp.csc_matrix(A)
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"LU needs a square matrix, got {A.shape}")
        self.shape = A.shape
        scale = abs(A).max() if A.nnz else 0.0
        if scale == 0.0:
            raise SingularMatrixError("zero matrix")
        try:
            self._lu = spla.splu(A, permc_spec="NATURAL", diag_pivot_thresh=1.0,
                                 options={"SymmetricMode": False})
        except RuntimeError as exc:
            raise SingularMatrixError(str(exc)) from exc
        pivots = np.abs(self._lu.U.diagonal())
        if pivots.min() <= PIVOT_RTOL * scale:
            raise SingularMatrixError(
                f"pivot {pivots.min():.3e} below tolerance {PIVOT_RTOL * scale:.3e}"
            )

    @property
    def nnz(self) -> int:
        return self._lu.L.nnz + self._lu.U.nnz

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.shape[0]:
            raise ValueError(f"rhs of length {b.shape[0]} for a {self.shape} factor")
        return self._lu.solve(b)


def sparse_lu_factor(A) -> SparseLu:
    return SparseLu(A)


def sparse_lu_solve(F: SparseLu, b):
    return F.solve(b)


def cholesky(A) -> np.ndarray:
    """Lower factor ``L`` with ``L L^T = A`` (row-oriented, one gemv per row)."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("Cholesky needs a square matrix")
    L = np.zeros_like(A)
    for j in range(n):
        piv = A[j, j] - L[j, :j] @ L[j, :j]
        if not piv > 0.0:
            raise NotPositiveDefiniteError(f"non-positive pivot {piv:.3e} at row {j}")
        L[j, j] = math.sqrt(piv)
        if j + 1 < n:
            L[j + 1:, j] = (A[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def jacobi_eig_sym(A, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi eigensolver for a dense symmetric matrix.

    Returns eigenvalues in ascending order and the matching orthonormal
    eigenvectors as columns.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("Jacobi needs a square matrix")
    scale = max(np.abs(A).max(), 1e-300)
    if np.abs(A - A.T).max() > 1e-12 * scale:
        raise ValueError("Jacobi eigensolver needs a symmetric matrix")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * max(np.linalg.norm(A), 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                vp = V[:, p].copy()
                V[:, p] = c * vp - s * V[:, q]
                V[:, q] = s * vp + c * V[:, q]
    else:
        raise RuntimeError("Jacobi sweeps did not converge")
    w = np.diag(A).copy()
    order = np.argsort(w)
    return w[order], V[:, order]


@dataclass
class LanczosResult:
    ritz_values: np.ndarray  # ascending
    ritz_vectors: np.ndarray  # columns, same order
    residuals: np.ndarray
    iterations: int


def lanczos(apply: Callable, n: int, k: int = 300, tol: float = 1e-10, v0=None,
            which: str = "both", inner=None, seed: int = 0) -> LanczosResult:
    """Lanczos with full reorthogonalization.

    Stops once the requested extreme Ritz pairs satisfy
    ``|beta_j * s_j| <= tol * max(1, |theta|)``.  ``which`` is ``"both"``,
    ``"max"`` or ``"min"``.  With ``inner`` (a matrix ``W``) the iteration
    runs in the ``W``-inner product, for operators self-adjoint with respect
    to it.
    """
    W = inner
    dot = (lambda x, y: x @ y) if W is None else (lambda x, y: x @ (W @ y))
    k = min(k, n)
    if v0 is None:
        v0 = np.random.default_rng(seed).standard_normal(n)
    v = np.asarray(v0, dtype=float).copy()
    v /= math.sqrt(dot(v, v))
    Q = np.zeros((n, k + 1))
    WQ = np.zeros((n, k + 1)) if W is not None else Q
    Q[:, 0] = v
    if W is not None:
        WQ[:, 0] = W @ v
    alpha = np.zeros(k)
    beta = np.zeros(k)
    theta = s = None
    for j in range(k):
        w = apply(Q[:, j])
        alpha[j] = WQ[:, j] @ w
        w = w - alpha[j] * Q[:, j] - (beta[j - 1] * Q[:, j - 1] if j else 0.0)
        # two passes of classical Gram-Schmidt against the whole basis
        for _ in range(2):
            w = w - Q[:, :j + 1] @ (WQ[:, :j + 1].T @ w)
        b = math.sqrt(max(dot(w, w), 0.0))
        beta[j] = b
        T = np.diag(alpha[:j + 1]) + np.diag(beta[:j], 1) + np.diag(beta[:j], -1)
        theta, s = np.linalg.eigh(T)
        res = np.abs(b * s[-1, :])
        want = {"both": [0, -1], "max": [-1], "min": [0]}[which]
        scale = np.maximum(1.0, np.abs(theta[want]))
        if np.all(res[want] <= tol * scale) or b <= 1e-14 * max(1.0, np.abs(theta).max()):
            return LanczosResult(theta, Q[:, :j + 1] @ s, res, j + 1)
        Q[:, j + 1] = w / b
        if W is not None:
            WQ[:, j + 1] = W @ Q[:, j + 1]
    raise LanczosNotConverged(
        f"Lanczos did not converge in {k} iterations",
        (float(theta[0]), float(theta[-1])),
    )


def lanczos_extremes(apply: Callable, n: int, k: int = 300, tol: float = 1e-10, **kw):
    """``(lambda_min, lambda_max)`` of a symmetric operator."""
    r = lanczos(apply, n, k=k, tol=tol, **kw)
    return float(r.ritz_values[0]), float(r.ritz_values[-1])


def write_matrix_market(path, A) -> None:
    scipy.io.mmwrite(str(path), sp.coo_matrix(A), field="real", symmetry="general")


def read_matrix_market(path) -> sp.csr_matrix:
    return as_csr(scipy.io.mmread(str(path)))
