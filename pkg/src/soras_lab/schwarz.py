"""One-level SORAS / ORAS preconditioners.

    SORAS: M^{-1} v = sum_j R_j^T D_j B_j^{-1} D_j R_j v
    ORAS:  M^{-1} v = sum_j R_j^T D_j B_j^{-1}     R_j v
"""
from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.sparse.linalg as spla

from .linalg import SingularMatrixError, SparseLu


class Variant(str, enum.Enum):
    SORAS = "SORAS"
    ORAS = "ORAS"


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("SORAS_LAB_THREADS", "1")))
    except ValueError:
        return 1


class SchwarzPreconditioner:
    """Sum of weighted local solves.

    Subdomain contributions are computed into separate buffers and reduced in
    ascending subdomain order, so results do not depend on ``threads``.
    """

    def __init__(self, n, restrictions, weights, factors, variant=Variant.SORAS, threads=None):
        self.n = int(n)
        self.restrictions = list(restrictions)
        self.weights = list(weights)
        self.factors = list(factors)
        self.variant = Variant(variant)
        self.threads = default_threads() if threads is None else max(1, int(threads))
        self.shape = (self.n, self.n)

    @property
    def n_subdomains(self) -> int:
        return len(self.restrictions)

    def local_contribution(self, j, v):
        """``D_j B_j^{-1} D_j R_j v`` (or without the right ``D_j`` for ORAS), in local numbering."""
        rv = v[self.restrictions[j]]
        if self.variant is Variant.SORAS:
            rv = (self.weights[j] * rv.T).T
        return (self.weights[j] * self.factors[j].solve(rv).T).T

    def apply(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.n:
            raise ValueError(f"vector of length {v.shape[0]} for a preconditioner of size {self.n}")
        if self.threads > 1 and self.n_subdomains > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                parts = list(pool.map(lambda j: self.local_contribution(j, v),
                                      range(self.n_subdomains)))
        else:
            parts = [self.local_contribution(j, v) for j in range(self.n_subdomains)]
        out = np.zeros_like(v)
        for idx, part in zip(self.restrictions, parts):
            out[idx] += part
        return out

    __call__ = apply

    def matmat(self, X):
        return self.apply(X)

    def as_linear_operator(self) -> spla.LinearOperator:
        return spla.LinearOperator(self.shape, matvec=self.apply, matmat=self.apply, dtype=float)

    def to_dense(self, rows=None, cols=None, block=512):
        """Dense ``M^{-1}`` restricted to ``rows x cols`` (default: everything)."""
        rows = np.arange(self.n) if rows is None else np.asarray(rows)
        cols = np.arange(self.n) if cols is None else np.asarray(cols)
        out = np.empty((len(rows), len(cols)))
        for start in range(0, len(cols), block):
            c = cols[start:start + block]
            E = np.zeros((self.n, len(c)))
            E[c, np.arange(len(c))] = 1.0
            out[:, start:start + len(c)] = self.apply(E)[rows]
        return out


def build_preconditioner(subdomains, pu, local_matrices, variant=Variant.SORAS, n=None,
                         threads=None) -> SchwarzPreconditioner:
    """Factorize every ``B_j`` and bundle it with ``R_j`` and ``D_j``."""
    if not (len(subdomains) == len(pu.weights) == len(local_matrices)):
        raise ValueError("subdomains, partition of unity and local matrices disagree in count")
    factors = []
    for sd, d, B in zip(subdomains, pu.weights, local_matrices):
        if B.shape != (sd.n, sd.n) or d.shape != (sd.n,):
            raise ValueError(f"subdomain {sd.id}: inconsistent local dimensions")
        try:
            factors.append(SparseLu(B))
        except SingularMatrixError as exc:
            raise SingularMatrixError(f"subdomain {sd.id}: {exc}") from exc
    if n is None:
        n = max(int(sd.nodes.max()) for sd in subdomains) + 1
    return SchwarzPreconditioner(n, [sd.nodes for sd in subdomains], pu.weights, factors,
                                 variant, threads)


def apply_preconditioner(P: SchwarzPreconditioner, v):
    return P.apply(v)


def identity_preconditioner(v):
    return np.array(v, dtype=float, copy=True)
