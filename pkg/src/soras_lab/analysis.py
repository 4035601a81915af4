"""Spectral diagnostics of the preconditioned operator ``M^{-1} A``.

All quantities are computed on the free (non-Dirichlet) nodes: the unit
Dirichlet rows of ``A`` would otherwise contribute spurious eigenvalues.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import cholesky, lanczos


@dataclass
class SpectrumReport:
    lambda_min: float
    lambda_max: float
    method: str
    descriptor: dict = field(default_factory=dict)


@dataclass
class FovReport:
    """Closed boundary polyline of the numerical range, clockwise from the rightmost point."""

    theta: np.ndarray
    points: np.ndarray  # complex
    n_angles: int
    descriptor: dict = field(default_factory=dict)

    @property
    def area(self) -> float:
        x, y = self.points.real, self.points.imag
        return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    def edge_turns(self) -> np.ndarray:
        """Cross products of consecutive non-degenerate edges."""
        p = self.points
        e = np.diff(np.append(p, p[0]))
        e = e[np.abs(e) > 1e-14 * max(1.0, np.abs(p).max())]
        nxt = np.roll(e, -1)
        return e.real * nxt.imag - e.imag * nxt.real

    def is_convex(self, tol=1e-10) -> bool:
        t = self.edge_turns()
        scale = tol * max(1.0, np.abs(self.points).max()) ** 2
        return bool(np.all(t <= scale) or np.all(t >= -scale))

    def contains(self, z, tol=1e-6) -> bool:
        p = self.points
        scale = max(1.0, np.abs(p).max())
        if self.area <= tol * scale:
            return (p.real.min() - tol <= z.real <= p.real.max() + tol
                    and abs(z.imag) <= tol + np.abs(p.imag).max())
        # clockwise boundary: inside points lie to the right of every edge
        a, b = p, np.roll(p, -1)
        e = b - a
        keep = np.abs(e) > 1e-14 * scale
        a, e = a[keep], e[keep]
        w = z - a
        cross = e.real * w.imag - e.imag * w.real
        return bool(np.all(cross / np.abs(e) <= tol))


def interior_blocks(A, P, interior):
    """Dense ``A`` and ``M^{-1}`` on the free nodes."""
    Aint = A[interior][:, interior].toarray()
    Mint = P.to_dense(interior, interior)
    return Aint, Mint


def preconditioned_dense(A, P, interior) -> np.ndarray:
    Aint, Mint = interior_blocks(A, P, interior)
    return Mint @ Aint


def preconditioned_spectrum_spd(A, P, interior, method="dense", descriptor=None,
                                tol=1e-10) -> SpectrumReport:
    """Extreme eigenvalues of ``M^{-1} A`` when ``A`` and ``M^{-1}`` are SPD.

    ``dense``: Cholesky ``M^{-1} = L L^T`` and the symmetric matrix ``L^T A L``,
    which is similar to ``M^{-1} A``.  ``lanczos``: Lanczos on ``M^{-1} A`` in
    the ``A`` inner product, where it is self-adjoint.
    """
    descriptor = dict(descriptor or {})
    if method == "dense":
        Aint, Mint = interior_blocks(A, P, interior)
        L = cholesky(0.5 * (Mint + Mint.T))
        S = L.T @ Aint @ L
        w = np.linalg.eigvalsh(0.5 * (S + S.T))
        return SpectrumReport(float(w[0]), float(w[-1]), "dense", descriptor)
    if method == "lanczos":
        Aint = A[interior][:, interior].tocsr()
        n_all = A.shape[0]

        def apply(v):
            full = np.zeros(n_all)
            full[interior] = Aint @ v
            return P.apply(full)[interior]

        r = lanczos(apply, len(interior), k=min(len(interior), 500), tol=tol, inner=Aint)
        return SpectrumReport(float(r.ritz_values[0]), float(r.ritz_values[-1]), "lanczos",
                              descriptor)
    raise ValueError(f"unknown method {method!r}")


def hermitian_embedding(P, theta):
    """Real symmetric ``[[Hr, -Hi], [Hi, Hr]]`` of ``H = (e^{i theta} P + e^{-i theta} P^T) / 2``."""
    Hr = math.cos(theta) * 0.5 * (P + P.T)
    Hi = math.sin(theta) * 0.5 * (P - P.T)
    return np.block([[Hr, -Hi], [Hi, Hr]])


def _boundary_point(P, u, v):
    z = u + 1j * v
    z = z / np.linalg.norm(z)
    return np.vdot(z, P @ z)


def fov_boundary(P, n_angles=64, method=None, descriptor=None, tol=1e-10) -> FovReport:
    """Boundary of ``{z* P z : |z| = 1}`` for a dense real matrix ``P``.

    For each ``theta_k = k pi / n_angles`` the top eigenvector of the Hermitian
    part of ``e^{i theta} P`` gives a support point; the lower half follows by
    conjugation.  ``method`` is ``dense`` (full symmetric eigensolve) or
    ``lanczos`` (warm-started from the previous angle); the default picks
    ``dense`` for ``n <= 400``.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    method = method or ("dense" if n <= 400 else "lanczos")
    S = 0.5 * (P + P.T)
    K = 0.5 * (P - P.T)
    thetas = np.pi * np.arange(n_angles + 1) / n_angles
    upper = []
    start = None
    for th in thetas:
        c, s = math.cos(th), math.sin(th)
        if method == "dense":
            w, V = np.linalg.eigh(hermitian_embedding(P, th))
            x = V[:, -1]
        elif method == "lanczos":
            def apply(y):
                a, b = y[:n], y[n:]
                return np.concatenate([c * (S @ a) - s * (K @ b), s * (K @ a) + c * (S @ b)])
            r = lanczos(apply, 2 * n, k=min(2 * n, 600), tol=tol, v0=start, which="max")
            x = r.ritz_vectors[:, -1]
            start = x
        else:
            raise ValueError(f"unknown method {method!r}")
        upper.append(_boundary_point(P, x[:n], x[n:]))
    upper = np.asarray(upper)
    # the angle sweep runs clockwise through the lower half-plane; mirror for the rest
    lower_pts = np.conj(upper[-2:0:-1])
    lower_th = 2 * np.pi - thetas[-2:0:-1]
    return FovReport(np.concatenate([thetas, lower_th]), np.concatenate([upper, lower_pts]),
                     n_angles, dict(descriptor or {}))


def write_fov_csv(path, report: FovReport) -> None:
    with open(path, "w") as fh:
        fh.write("theta,re,im\n")
        for th, z in zip(report.theta, report.points):
            fh.write(f"{th:.12g},{z.real:.12g},{z.imag:.12g}\n")


def write_spectrum_csv(path, reports) -> None:
    with open(path, "w") as fh:
        fh.write("delta,pu,lambda_min,lambda_max\n")
        for r in reports:
            d = r.descriptor
            fh.write(f"{d.get('delta_over_h', '')}h,{d.get('pu', '')},"
                     f"{r.lambda_min:.6f},{r.lambda_max:.6f}\n")
