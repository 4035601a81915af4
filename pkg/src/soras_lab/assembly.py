"""P1 assembly of the conservative reaction-convection-diffusion operator.

The bilinear form is

    a(u, v) = int c_tilde u v + 1/2 (a.grad u) v - 1/2 u (a.grad v) + nu grad u.grad v

with ``c_tilde = c0 + div(a)/2``.  Local subdomain matrices add the absorbing
interface term ``int alpha u v`` on the artificial boundary.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh

Scalar = Union[float, Callable[[np.ndarray, np.ndarray], np.ndarray]]

# Barycentric coordinates of the three edge midpoints; the rule is exact for quadratics.
_MIDPOINT_BARY = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])


@dataclass(frozen=True)
class Velocity:
    name: str
    field: Callable[[np.ndarray, np.ndarray], tuple]
    divergence: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def __call__(self, x, y):
        ax, ay = self.field(np.asarray(x, float), np.asarray(y, float))
        return np.broadcast_to(ax, np.shape(x)).astype(float), np.broadcast_to(ay, np.shape(x)).astype(float)

    def div(self, x, y):
        return np.broadcast_to(self.divergence(np.asarray(x, float), np.asarray(y, float)), np.shape(x)).astype(float)


def _const(value):
    return lambda x, y: np.full(np.shape(x), float(value))


ROTATING = Velocity(
    "rotating",
    lambda x, y: (-2 * np.pi * (y - 0.1), 2 * np.pi * (x - 0.5)),
    _const(0.0),
)
NEGDIV = Velocity("negdiv", lambda x, y: (-x, -y), _const(-2.0))
NORMAL = Velocity("normal", lambda x, y: (np.ones_like(x), np.zeros_like(x)), _const(0.0))
ZERO = Velocity("zero", lambda x, y: (np.zeros_like(x), np.zeros_like(x)), _const(0.0))

VELOCITIES = {v.name: v for v in (ROTATING, NEGDIV, NORMAL, ZERO)}


def custom_velocity(ax, ay, div, name="custom") -> Velocity:
    """Velocity from two coordinate functions and an analytic divergence."""
    return Velocity(name, lambda x, y: (ax(x, y), ay(x, y)), div)


@dataclass(frozen=True)
class Coefficients:
    c0: Scalar = 1.0
    nu: float = 1.0
    velocity: Velocity = ZERO
    supg: bool = False

    def __post_init__(self):
        if isinstance(self.velocity, str):
            object.__setattr__(self, "velocity", VELOCITIES[self.velocity])
        if not self.nu > 0:
            raise ValueError(f"viscosity must be positive, got {self.nu}")

    def c0_at(self, x, y):
        if callable(self.c0):
            return np.broadcast_to(self.c0(x, y), np.shape(x)).astype(float)
        return np.full(np.shape(x), float(self.c0))

    def c_tilde(self, x, y):
        """Effective reaction ``c0 + div(a)/2`` using the analytic divergence."""
        return self.c0_at(x, y) + 0.5 * self.velocity.div(x, y)


@dataclass(frozen=True)
class SourceTerm:
    """Gaussian bump ``amplitude * exp(-rate * |x - center|^2)``."""

    center: tuple = (0.5, 0.1)
    amplitude: float = 100.0
    rate: float = 10.0

    def __call__(self, x, y):
        x0, y0 = self.center
        return self.amplitude * np.exp(-self.rate * ((x - x0) ** 2 + (y - y0) ** 2))


def robin_alpha(a_dot_n, c0, nu):
    """Absorbing interface coefficient ``sqrt((a.n)^2 + 4 c0 nu) / 2``."""
    radicand = np.asarray(a_dot_n, float) ** 2 + 4.0 * np.asarray(c0, float) * nu
    if np.any(radicand < 0):
        raise ValueError("negative radicand in Robin coefficient (c0 * nu too negative)")
    out = np.sqrt(radicand) / 2.0
    return float(out) if out.ndim == 0 else out


def supg_tau(h_k, a_norm, nu):
    """Streamline-diffusion parameter ``h/(2|a|) (coth(Pe) - 1/Pe)``, ``Pe = |a| h / (2 nu)``.

    Vectorised over elements.  Falls back to the small-Peclet limit
    ``h^2 / (12 nu)`` where the closed form cancels catastrophically.
    """
    h_k = np.asarray(h_k, float)
    a_norm = np.asarray(a_norm, float)
    pe = a_norm * h_k / (2.0 * nu)
    tau = np.empty(np.broadcast(h_k, a_norm).shape)
    h_b = np.broadcast_to(h_k, tau.shape)
    a_b = np.broadcast_to(a_norm, tau.shape)
    pe_b = np.broadcast_to(pe, tau.shape)
    # below ~1e-3 the coth expansion Pe/3 - Pe^3/45 is exact to machine precision
    small = (a_b * h_b < 1e-12) | (pe_b < 1e-3)
    tiny = a_b * h_b < 1e-12
    tau[tiny] = h_b[tiny] ** 2 / (12.0 * nu)
    ser = small & ~tiny
    p = pe_b[ser]
    tau[ser] = h_b[ser] / (2.0 * a_b[ser]) * (p / 3.0 - p ** 3 / 45.0)
    big = ~small
    p = pe_b[big]
    tau[big] = h_b[big] / (2.0 * a_b[big]) * (1.0 / np.tanh(p) - 1.0 / p)
    return float(tau) if tau.ndim == 0 else tau


def _geometry(mesh: Mesh, elements):
    p = mesh.nodes[mesh.triangles[elements]]  # (m, 3, 2)
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    area = 0.5 * det
    # grad of barycentric lambda_i = rot90 of the opposite edge / (2 area)
    opp = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    grads = np.stack([-opp[..., 1], opp[..., 0]], axis=-1) / det[:, None, None]
    qpts = np.einsum("qi,mid->mqd", _MIDPOINT_BARY, p)
    edges = np.linalg.norm(opp, axis=-1)
    return p, area, grads, qpts, edges


def element_matrices(mesh: Mesh, coeffs: Coefficients, elements=None):
    """Local 3x3 matrices ``K[m, i, j] = a(phi_j, phi_i)`` restricted to each element."""
    if elements is None:
        elements = np.arange(mesh.n_triangles)
    _, area, grads, qpts, edges = _geometry(mesh, elements)
    qx, qy = qpts[..., 0], qpts[..., 1]
    w = area[:, None] / 3.0

    ct = coeffs.c_tilde(qx, qy)
    mass = np.einsum("mq,mq,qi,qj->mij", w, ct, _MIDPOINT_BARY, _MIDPOINT_BARY)
    stiff = coeffs.nu * area[:, None, None] * np.einsum("mid,mjd->mij", grads, grads)

    ax, ay = coeffs.velocity(qx, qy)
    # Q[m, i] = int_K a phi_i  (exact: a affine, phi linear)
    qa = np.stack([np.einsum("mq,mq,qi->mi", w, ax, _MIDPOINT_BARY),
                   np.einsum("mq,mq,qi->mi", w, ay, _MIDPOINT_BARY)], axis=-1)
    # 1/2 int (a.grad phi_j) phi_i - 1/2 int phi_j (a.grad phi_i)
    t = np.einsum("mid,mjd->mij", qa, grads)
    conv = 0.5 * (t - t.transpose(0, 2, 1))

    K = mass + stiff + conv
    if coeffs.supg:
        K = K + _supg_matrices(coeffs, area, grads, qx, qy, ax, ay, edges)
    return K


def _supg_tau_elements(coeffs, qx, qy, edges):
    cx, cy = qx.mean(axis=1), qy.mean(axis=1)
    acx, acy = coeffs.velocity(cx, cy)
    return supg_tau(edges.max(axis=1), np.hypot(acx, acy), coeffs.nu)


def _supg_matrices(coeffs, area, grads, qx, qy, ax, ay, edges):
    tau = _supg_tau_elements(coeffs, qx, qy, edges)
    w = area[:, None] / 3.0
    # (a.grad phi_i) at each quadrature point
    adg = ax[:, :, None] * grads[:, None, :, 0] + ay[:, :, None] * grads[:, None, :, 1]
    return tau[:, None, None] * np.einsum("mq,mqi,mqj->mij", w, adg, adg)


def element_loads(mesh: Mesh, coeffs: Coefficients, source: SourceTerm, elements=None):
    if elements is None:
        elements = np.arange(mesh.n_triangles)
    _, area, grads, qpts, edges = _geometry(mesh, elements)
    qx, qy = qpts[..., 0], qpts[..., 1]
    w = area[:, None] / 3.0
    f = source(qx, qy)
    load = np.einsum("mq,mq,qi->mi", w, f, _MIDPOINT_BARY)
    if coeffs.supg:
        tau = _supg_tau_elements(coeffs, qx, qy, edges)
        ax, ay = coeffs.velocity(qx, qy)
        adg = ax[:, :, None] * grads[:, None, :, 0] + ay[:, :, None] * grads[:, None, :, 1]
        load = load + tau[:, None] * np.einsum("mq,mq,mqi->mi", w, f, adg)
    return load


def _scatter(local, conn, n):
    k = conn.shape[1]
    rows = np.repeat(conn, k, axis=1).ravel()
    cols = np.tile(conn, (1, k)).ravel()
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def dirichlet_eliminate(A, rhs, fixed):
    """Zero rows and columns of ``fixed`` nodes, unit diagonal, zero rhs."""
    A = sp.csr_matrix(A)
    keep = np.ones(A.shape[0])
    keep[fixed] = 0.0
    P = sp.diags(keep)
    A = (P @ A @ P + sp.diags(1.0 - keep)).tocsr()
    A.eliminate_zeros()
    A.sort_indices()
    if rhs is not None:
        rhs = rhs.copy()
        rhs[fixed] = 0.0
    return A, rhs


def assemble_global(mesh: Mesh, coeffs: Coefficients, source: SourceTerm | None = None,
                    dirichlet: bool = True):
    """Global matrix and load vector with homogeneous Dirichlet data on the outer boundary."""
    if not np.any(~mesh.boundary_node):
        raise ValueError("mesh has no interior nodes")
    source = source or SourceTerm()
    K = element_matrices(mesh, coeffs)
    A = _scatter(K, mesh.triangles, mesh.n_nodes)
    F = np.zeros(mesh.n_nodes)
    np.add.at(F, mesh.triangles, element_loads(mesh, coeffs, source))
    if dirichlet:
        A, F = dirichlet_eliminate(A, F, np.flatnonzero(mesh.boundary_node))
    else:
        A.sort_indices()
    return A, F


def interface_edges(mesh: Mesh, col: int):
    """Consecutive node pairs along the vertical grid line ``col``."""
    rows = np.arange(mesh.ny)
    return np.column_stack([mesh.node_index(col, rows), mesh.node_index(col, rows + 1)])


def robin_edge_matrices(mesh: Mesh, coeffs: Coefficients, edges, normal):
    """Edge mass matrices ``int_e alpha phi_i phi_j`` by Simpson's rule."""
    p = mesh.nodes[edges]  # (e, 2, 2)
    length = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
    pts = np.stack([p[:, 0], 0.5 * (p[:, 0] + p[:, 1]), p[:, 1]], axis=1)
    x, y = pts[..., 0], pts[..., 1]
    ax, ay = coeffs.velocity(x, y)
    alpha = robin_alpha(ax * normal[0] + ay * normal[1], coeffs.c0_at(x, y), coeffs.nu)
    basis = np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]])
    wts = np.array([1.0, 4.0, 1.0]) / 6.0
    return np.einsum("e,q,eq,qi,qj->eij", length, wts, alpha, basis, basis)


def assemble_local(mesh: Mesh, subdomain, coeffs: Coefficients, element_mats=None):
    """Local matrix ``B_j`` on ``subdomain`` with Robin interface and outer Dirichlet rows.

    ``element_mats`` may carry the precomputed global element matrices to avoid
    recomputation across subdomains.
    """
    if subdomain.interface_cols and not len(subdomain.interface_nodes):
        raise ValueError(f"subdomain {subdomain.id} has no interface nodes")
    n_all = mesh.n_nodes
    g2l = np.full(n_all, -1, dtype=np.int64)
    g2l[subdomain.nodes] = np.arange(subdomain.n)
    elems = subdomain.elements
    K = element_mats[elems] if element_mats is not None else element_matrices(mesh, coeffs, elems)
    conn = g2l[mesh.triangles[elems]]
    B = _scatter(K, conn, subdomain.n)
    for col, nx_sign in subdomain.interface_cols:
        e = interface_edges(mesh, col)
        E = robin_edge_matrices(mesh, coeffs, e, (nx_sign, 0.0))
        B = B + _scatter(E, g2l[e], subdomain.n)
    fixed = np.flatnonzero(mesh.boundary_node[subdomain.nodes])
    B, _ = dirichlet_eliminate(B, None, fixed)
    return B


def c_tilde_bounds(mesh: Mesh, coeffs: Coefficients):
    """Min and max of ``c0 + div(a)/2`` over the mesh nodes."""
    ct = coeffs.c_tilde(mesh.nodes[:, 0], mesh.nodes[:, 1])
    return float(ct.min()), float(ct.max())
