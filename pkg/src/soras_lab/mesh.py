"""Uniform triangulation of the strip rectangle [0, N*0.2] x [0, 0.2]."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STRIP_WIDTH = 0.2


@dataclass(frozen=True)
class Mesh:
    """Structured P1 mesh.

    Nodes are numbered lexicographically by (row, column), so node
    ``k = row * (nx + 1) + col`` sits at ``(col * h, row * h)``.  Every grid
    square is cut along its lower-left to upper-right diagonal.
    """

    nx: int
    ny: int
    h: float
    nodes: np.ndarray  # (n, 2)
    triangles: np.ndarray  # (m, 3), counter-clockwise
    boundary_node: np.ndarray  # (n,) bool
    node_grid_index: np.ndarray  # (n, 2) as (col, row)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def node_index(self, col, row):
        return np.asarray(row) * (self.nx + 1) + np.asarray(col)

    def triangle_columns(self) -> np.ndarray:
        """Element column of each triangle (triangles 2k, 2k+1 share a square)."""
        squares = np.arange(self.n_triangles) // 2
        return squares % self.nx

    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def dump(self, path) -> None:
        """Write the plain-text mesh dump (header, nodes, triangles)."""
        with open(path, "w") as fh:
            fh.write(f"nodes {self.n_nodes} triangles {self.n_triangles}\n")
            for (x, y), b in zip(self.nodes, self.boundary_node):
                fh.write(f"{x:.17g} {y:.17g} {int(b)}\n")
            for t in self.triangles:
                fh.write(f"{t[0]} {t[1]} {t[2]}\n")


def build_strip_mesh(N: int, ny: int) -> Mesh:
    """Mesh of [0, N*0.2] x [0, 0.2] with ``ny`` intervals vertically.

    ``ny`` counts intervals, so ``N=5, ny=60`` gives 61 * 301 = 18361 nodes.
    The smallest grid ``ny=1`` is accepted for degenerate tests.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"number of strips must be a positive integer, got {N}")
    if int(ny) != ny or ny < 1:
        raise ValueError(f"ny must be a positive integer, got {ny}")
    N, ny = int(N), int(ny)
    nx = N * ny
    h = STRIP_WIDTH / ny

    rows, cols = np.divmod(np.arange((nx + 1) * (ny + 1)), nx + 1)
    nodes = np.column_stack([cols * h, rows * h])
    grid = np.column_stack([cols, rows])
    boundary = (cols == 0) | (cols == nx) | (rows == 0) | (rows == ny)

    sr, sc = np.divmod(np.arange(nx * ny), nx)
    ll = sr * (nx + 1) + sc
    lr = ll + 1
    ul = ll + nx + 1
    ur = ul + 1
    tris = np.empty((2 * nx * ny, 3), dtype=np.int64)
    tris[0::2] = np.column_stack([ll, lr, ur])
    tris[1::2] = np.column_stack([ll, ur, ul])

    for arr in (nodes, tris, boundary, grid):
        arr.setflags(write=False)
    return Mesh(nx=nx, ny=ny, h=h, nodes=nodes, triangles=tris,
                boundary_node=boundary, node_grid_index=grid)


def node_depth_from_segment(mesh: Mesh, x_interface: float, node: int) -> float:
    """Horizontal distance from ``node`` to the vertical grid line ``x = x_interface``.

    Computed in grid units so distances between grid lines are exact multiples of h.
    """
    line = round(x_interface / mesh.h)
    return abs(int(mesh.node_grid_index[node, 0]) - line) * mesh.h
