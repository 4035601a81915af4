"""Vertical-strip overlapping decomposition and partitions of unity."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .mesh import Mesh


class PUKind(str, enum.Enum):
    # PU1: zero gradient at the subdomain interface, ramp over the two central layers
    PU1 = "PU1"
    # PU2: ramp across the whole overlap, nonzero in its interior
    PU2 = "PU2"


@dataclass(frozen=True)
class Strip:
    """Non-overlapping block of element columns ``[start, stop)``."""

    id: int
    start: int
    stop: int


@dataclass(frozen=True)
class Subdomain:
    id: int
    strip: Strip
    col_start: int  # first element column
    col_stop: int  # one past the last element column
    elements: np.ndarray
    nodes: np.ndarray  # restriction map: local index -> global node
    interface_nodes: np.ndarray
    # (node column, x-component of the outward normal) for each artificial boundary line
    interface_cols: tuple = field(default=())
    interface_x: tuple = field(default=())

    @property
    def n(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class PartitionOfUnity:
    kind: PUKind
    weights: list  # d_j, aligned with subdomain.nodes

    def __getitem__(self, j):
        return self.weights[j]

    def __len__(self):
        return len(self.weights)


def partition_strips(mesh: Mesh, N: int) -> list[Strip]:
    if N < 1 or mesh.nx % N:
        raise ValueError(f"{mesh.nx} element columns cannot be split into {N} equal strips")
    width = mesh.nx // N
    return [Strip(j, j * width, (j + 1) * width) for j in range(N)]


def add_overlap(mesh: Mesh, strips: list[Strip], layers: int) -> list[Subdomain]:
    """Grow each strip by ``layers`` element columns on every interior side.

    Two neighbours then share ``2 * layers`` element columns, i.e. an overlap
    of width ``delta = 2 * layers * h``.
    """
    if len(strips) > 1:
        if layers < 1:
            raise ValueError("overlap needs at least one element layer")
        narrowest = min(s.stop - s.start for s in strips)
        if 2 * layers > narrowest:
            raise ValueError(
                f"{layers} overlap layers on strips of width {narrowest} would let a "
                "subdomain reach past its neighbour"
            )

    cols = mesh.node_grid_index[:, 0]
    tri_cols = mesh.triangle_columns()
    out = []
    for s in strips:
        c0 = max(0, s.start - layers) if len(strips) > 1 else s.start
        c1 = min(mesh.nx, s.stop + layers) if len(strips) > 1 else s.stop
        elements = np.flatnonzero((tri_cols >= c0) & (tri_cols < c1))
        nodes = np.flatnonzero((cols >= c0) & (cols <= c1))
        iface = []
        if c0 > 0:
            iface.append((c0, -1.0))
        if c1 < mesh.nx:
            iface.append((c1, 1.0))
        inodes = np.flatnonzero(np.isin(cols, [c for c, _ in iface]))
        out.append(Subdomain(
            id=s.id, strip=s, col_start=c0, col_stop=c1, elements=elements, nodes=nodes,
            interface_nodes=inodes, interface_cols=tuple(iface),
            interface_x=tuple(c * mesh.h for c, _ in iface),
        ))
    return out


def build_decomposition(mesh: Mesh, N: int, layers: int) -> list[Subdomain]:
    return add_overlap(mesh, partition_strips(mesh, N), layers)


def _ramp(col, center, half_width):
    """Linear ramp in node columns: 0 at ``center - half_width``, 1 at ``center + half_width``."""
    return np.clip((col - (center - half_width)) / (2.0 * half_width), 0.0, 1.0)


def _layer_average(col, start, stop, layers):
    """Average of the indicators of the strip grown by 0, 1, ..., layers-1 columns.

    Equals 1 on the strip and ``(layers - k) / layers`` at ``k`` columns outside it.
    """
    outside = np.maximum(start - col, col - stop)
    return np.clip((layers - outside) / layers, 0.0, 1.0)


def build_pu(kind, mesh: Mesh, subdomains: list[Subdomain], layers: int) -> PartitionOfUnity:
    """Nodal weights ``d_j`` with ``sum_j R_j^T D_j R_j = I``.

    Both kinds depend on the horizontal position only.

    PU1 ramps linearly over the two element columns around each original strip
    interface (1/2 on the interface line) and is 0 / 1 on the remaining outer
    layers, so it is flat where it meets the subdomain boundary.

    PU2 starts from the layer average ``v_j`` (1 on the strip, decaying by
    ``1/layers`` per column outside) and normalises, ``d_j = v_j / sum_k v_k``.
    At ``k`` columns from the strip interface this gives ``layers/(2 layers - k)``
    inside and ``(layers - k)/(2 layers - k)`` outside, positive across the
    whole overlap.  For a single layer the two kinds coincide.
    """
    kind = PUKind(kind)
    cols = mesh.node_grid_index[:, 0].astype(float)
    weights = []
    if kind is PUKind.PU1:
        for sd in subdomains:
            c = cols[sd.nodes]
            d = np.ones(sd.n)
            if sd.col_start > 0:
                d = np.minimum(d, _ramp(c, sd.strip.start, 1))
            if sd.col_stop < mesh.nx:
                d = np.minimum(d, 1.0 - _ramp(c, sd.strip.stop, 1))
            weights.append(d)
        return PartitionOfUnity(kind, weights)

    if len(subdomains) == 1:
        return PartitionOfUnity(kind, [np.ones(subdomains[0].n)])
    raw = [_layer_average(cols[sd.nodes], sd.strip.start, sd.strip.stop, layers)
           for sd in subdomains]
    total = np.zeros(mesh.n_nodes)
    for sd, v in zip(subdomains, raw):
        total[sd.nodes] += v
    for sd, v in zip(subdomains, raw):
        weights.append(v / total[sd.nodes])
    return PartitionOfUnity(kind, weights)


def pu_sum(mesh: Mesh, subdomains: list[Subdomain], pu: PartitionOfUnity) -> np.ndarray:
    """Diagonal of ``sum_j R_j^T D_j R_j``."""
    total = np.zeros(mesh.n_nodes)
    for sd, d in zip(subdomains, pu.weights):
        total[sd.nodes] += d
    return total


def dump_pu_csv(path, mesh: Mesh, subdomain: Subdomain, weights) -> None:
    """Write ``d_j`` of one subdomain as ``node_index,x,y,value`` rows."""
    with open(path, "w") as fh:
        fh.write("node_index,x,y,value\n")
        for g, v in zip(subdomain.nodes, weights):
            x, y = mesh.nodes[g]
            fh.write(f"{g},{x:.17g},{y:.17g},{v:.17g}\n")
