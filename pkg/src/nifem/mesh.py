"""Structured triangulations of the coupled benchmark geometry.

The benchmark domain is the rectangle [-1, 1] x [0, 1] split by the curve
x = -(1/5) cos(2 pi y) into a left ("slave") and a right ("master")
subdomain.  Each subdomain is meshed independently with a sheared
transfinite grid whose interface column is placed exactly on the curve, so
the two discrete interface polylines sample the same curve but generally do
not coincide.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

__all__ = [
    "BoundaryTag",
    "Mesh",
    "MeshPair",
    "MeshFormatError",
    "interface_curve",
    "generate_benchmark_pair",
    "generate_conforming_monolith",
    "interface_nodes",
    "read_mesh",
    "write_mesh",
]


class BoundaryTag(IntEnum):
    OUTER_DIRICHLET = 0
    INTERFACE = 1


_TAG_NAMES = {BoundaryTag.OUTER_DIRICHLET: "outer", BoundaryTag.INTERFACE: "interface"}
_TAG_VALUES = {v: k for k, v in _TAG_NAMES.items()}


class MeshFormatError(ValueError):
    """Raised when a mesh file cannot be parsed; message names the line."""


def interface_curve(y):
    """x-coordinate of the benchmark interface at height y."""
    return -0.2 * np.cos(2.0 * np.pi * np.asarray(y, dtype=float))


@dataclass
class Mesh:
    """Conforming triangulation with tagged boundary edges.

    nodes : (N, 2) float array of coordinates
    triangles : (M, 3) int array, counterclockwise vertex indices
    boundary_edges : (B, 2) int array, each edge of the topological boundary
    boundary_tags : (B,) int array of BoundaryTag values
    triangle_labels : optional (M,) int array (0 = slave side, 1 = master
        side) carried by monolithic reference meshes
    h : maximum edge length over all triangles (computed)
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    triangle_labels: np.ndarray | None = None
    h: float = field(init=False)

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(self.nodes, dtype=np.float64)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        self.boundary_edges = np.ascontiguousarray(self.boundary_edges, dtype=np.int64)
        self.boundary_tags = np.asarray(self.boundary_tags, dtype=np.int64)
        if self.triangle_labels is not None:
            self.triangle_labels = np.asarray(self.triangle_labels, dtype=np.int64)
        self._validate()
        self.h = float(np.sqrt(self._squared_edge_lengths().max(axis=1)).max())

    # -- derived quantities -------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def triangle_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def _squared_edge_lengths(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        out = np.empty((self.n_triangles, 3))
        for k in range(3):
            d = p[:, (k + 1) % 3] - p[:, k]
            out[:, k] = d[:, 0] ** 2 + d[:, 1] ** 2
        return out

    def boundary_nodes(self, tag: BoundaryTag) -> np.ndarray:
        """Sorted node indices incident to boundary edges with the given tag."""
        sel = self.boundary_edges[self.boundary_tags == tag]
        return np.unique(sel)

    # -- validation ---------------------------------------------------------

    def _validate(self):
        n = self.n_nodes
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= n):
            raise ValueError("triangle refers to node index out of range")
        areas = self.triangle_areas()
        bad = np.flatnonzero(areas <= 0)
        if bad.size:
            raise ValueError(f"triangle {bad[0]} has non-positive area")
        if self.triangle_labels is not None and len(self.triangle_labels) != self.n_triangles:
            raise ValueError("triangle_labels length mismatch")
        if len(self.boundary_tags) != len(self.boundary_edges):
            raise ValueError("boundary_tags length mismatch")
        # boundary edges must tile the topological boundary exactly
        declared = self._edge_keys(self.boundary_edges)
        if len(np.unique(declared)) != len(declared):
            raise ValueError("duplicate boundary edge")
        topo = self._topological_boundary_keys()
        if not np.array_equal(np.sort(declared), topo):
            raise ValueError("boundary edges do not tile the triangulation boundary")

    def _edge_keys(self, edges: np.ndarray) -> np.ndarray:
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        return lo * self.n_nodes + hi

    def _topological_boundary_keys(self) -> np.ndarray:
        t = self.triangles
        all_edges = np.concatenate(
            [t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=0
        )
        keys = self._edge_keys(all_edges)
        uniq, counts = np.unique(keys, return_counts=True)
        return np.sort(uniq[counts == 1])


@dataclass
class MeshPair:
    """The two independently meshed subdomains of a coupled problem."""

    slave: Mesh
    master: Mesh
    h: float = field(init=False)

    def __post_init__(self):
        for name, mesh in (("slave", self.slave), ("master", self.master)):
            if not np.any(mesh.boundary_tags == BoundaryTag.INTERFACE):
                raise ValueError(f"{name} mesh has no interface-tagged edges")
        self.h = max(self.slave.h, self.master.h)


# -- generation ---------------------------------------------------------------


def _sheared_grid(n_interface: int, nx: int, side: str) -> Mesh:
    """Sheared transfinite grid for one subdomain of the benchmark rectangle.

    Rows are uniform in y with ``n_interface`` intervals; the column on the
    interface side is placed exactly on the curve.
    """
    ny = n_interface
    y = np.linspace(0.0, 1.0, ny + 1)
    c = interface_curve(y)
    xi = np.linspace(0.0, 1.0, nx + 1)
    if side == "slave":
        x = -1.0 + (1.0 + c)[:, None] * xi[None, :]
        x[:, 0] = -1.0
        x[:, nx] = c
        iface_col = nx
    else:
        x = c[:, None] + (1.0 - c)[:, None] * xi[None, :]
        x[:, 0] = c
        x[:, nx] = 1.0
        iface_col = 0
    nodes = np.column_stack(
        [x.ravel(), np.repeat(y, nx + 1)]
    )

    def nid(i, j):
        return j * (nx + 1) + i

    jj, ii = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    v00 = nid(ii, jj).ravel()
    v10 = nid(ii + 1, jj).ravel()
    v11 = nid(ii + 1, jj + 1).ravel()
    v01 = nid(ii, jj + 1).ravel()
    triangles = np.empty((2 * v00.size, 3), dtype=np.int64)
    triangles[0::2] = np.column_stack([v00, v10, v11])
    triangles[1::2] = np.column_stack([v00, v11, v01])

    edges = []
    tags = []
    for i in range(nx):  # bottom and top rows
        edges.append((nid(i, 0), nid(i + 1, 0)))
        tags.append(BoundaryTag.OUTER_DIRICHLET)
        edges.append((nid(i, ny), nid(i + 1, ny)))
        tags.append(BoundaryTag.OUTER_DIRICHLET)
    for j in range(ny):  # lateral columns
        for col in (0, nx):
            tag = BoundaryTag.INTERFACE if col == iface_col else BoundaryTag.OUTER_DIRICHLET
            edges.append((nid(col, j), nid(col, j + 1)))
            tags.append(tag)
    return Mesh(nodes, triangles, np.array(edges), np.array(tags, dtype=np.int64))


def generate_benchmark_pair(n_slave: int, n_master: int, ny_factor: float = 1.0) -> MeshPair:
    """Mesh the two sides of the benchmark rectangle independently.

    ``n_slave`` and ``n_master`` set the number of interface segments of each
    subdomain; ``ny_factor`` scales the cross-interface grid density relative
    to the interface density.
    """
    if n_slave < 2 or n_master < 2:
        raise ValueError("need at least 2 elements along each interface")
    if ny_factor <= 0:
        raise ValueError("ny_factor must be positive")
    nx_s = max(1, round(n_slave * ny_factor))
    nx_m = max(1, round(n_master * ny_factor))
    return MeshPair(
        slave=_sheared_grid(n_slave, nx_s, "slave"),
        master=_sheared_grid(n_master, nx_m, "master"),
    )


def generate_conforming_monolith(n_interface: int) -> Mesh:
    """Single conforming triangulation of the whole rectangle.

    The edge set contains an ``n_interface``-segment polyline on the
    interface curve; every triangle lies on one side of it and carries a
    side label so piecewise material parameters can be assigned.
    """
    n = n_interface
    if n < 2:
        raise ValueError("need at least 2 elements along the interface")
    y = np.linspace(0.0, 1.0, n + 1)
    c = interface_curve(y)
    xi = np.linspace(0.0, 1.0, n + 1)
    xl = -1.0 + (1.0 + c)[:, None] * xi[None, :]
    xr = c[:, None] + (1.0 - c)[:, None] * xi[None, :]
    x = np.concatenate([xl[:, :-1], xr], axis=1)
    ncol = 2 * n + 1
    x[:, 0] = -1.0
    x[:, n] = c
    x[:, 2 * n] = 1.0
    nodes = np.column_stack([x.ravel(), np.repeat(y, ncol)])

    def nid(i, j):
        return j * ncol + i

    jj, ii = np.meshgrid(np.arange(n), np.arange(2 * n), indexing="ij")
    v00 = nid(ii, jj).ravel()
    v10 = nid(ii + 1, jj).ravel()
    v11 = nid(ii + 1, jj + 1).ravel()
    v01 = nid(ii, jj + 1).ravel()
    triangles = np.empty((2 * v00.size, 3), dtype=np.int64)
    triangles[0::2] = np.column_stack([v00, v10, v11])
    triangles[1::2] = np.column_stack([v00, v11, v01])
    labels = np.repeat((ii.ravel() >= n).astype(np.int64), 2)

    edges = []
    for i in range(2 * n):
        edges.append((nid(i, 0), nid(i + 1, 0)))
        edges.append((nid(i, n), nid(i + 1, n)))
    for j in range(n):
        edges.append((nid(0, j), nid(0, j + 1)))
        edges.append((nid(2 * n, j), nid(2 * n, j + 1)))
    tags = np.full(len(edges), BoundaryTag.OUTER_DIRICHLET, dtype=np.int64)
    return Mesh(nodes, triangles, np.array(edges), tags, triangle_labels=labels)


# -- interface extraction -----------------------------------------------------


def interface_nodes(mesh: Mesh) -> np.ndarray:
    """Node indices of the interface polyline, ordered endpoint to endpoint.

    The interface-tagged edges must form a single simple open polyline;
    cycles, branches, and empty interfaces are rejected.
    """
    edges = mesh.boundary_edges[mesh.boundary_tags == BoundaryTag.INTERFACE]
    if len(edges) == 0:
        raise ValueError("mesh has no interface-tagged edges")
    adj: dict[int, list[int]] = {}
    for a, b in edges:
        adj.setdefault(int(a), []).append(int(b))
        adj.setdefault(int(b), []).append(int(a))
    degrees = {n: len(v) for n, v in adj.items()}
    if any(d > 2 for d in degrees.values()):
        raise ValueError("interface edges branch")
    ends = [n for n, d in degrees.items() if d == 1]
    if len(ends) != 2 or len(adj) != len(edges) + 1:
        raise ValueError("interface edges do not form a simple open polyline")
    # start at the endpoint with the lexicographically smaller (y, x)
    key = lambda n: (mesh.nodes[n, 1], mesh.nodes[n, 0])
    start = min(ends, key=key)
    path = [start]
    prev = -1
    while True:
        nxt = [n for n in adj[path[-1]] if n != prev]
        if not nxt:
            break
        prev = path[-1]
        path.append(nxt[0])
    if len(path) != len(edges) + 1:
        raise ValueError("interface edges do not form a simple open polyline")
    return np.array(path, dtype=np.int64)


# -- text I/O -----------------------------------------------------------------


def write_mesh(mesh: Mesh) -> str:
    lines = [f"nodes {mesh.n_nodes}"]
    lines += [f"{repr(x)} {repr(y)}" for x, y in mesh.nodes]
    lines.append(f"triangles {mesh.n_triangles}")
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles]
    lines.append(f"boundary {len(mesh.boundary_edges)}")
    lines += [
        f"{i} {j} {_TAG_NAMES[BoundaryTag(t)]}"
        for (i, j), t in zip(mesh.boundary_edges, mesh.boundary_tags)
    ]
    return "\n".join(lines) + "\n"


def read_mesh(text: str) -> Mesh:
    lines = text.splitlines()
    pos = 0

    def next_line():
        nonlocal pos
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        if pos >= len(lines):
            raise MeshFormatError(f"line {len(lines) + 1}: unexpected end of file")
        pos += 1
        return pos, lines[pos - 1].strip()

    def header(name):
        ln, line = next_line()
        parts = line.split()
        if len(parts) != 2 or parts[0] != name:
            raise MeshFormatError(f"line {ln}: expected '{name} <count>'")
        try:
            count = int(parts[1])
        except ValueError:
            raise MeshFormatError(f"line {ln}: bad count {parts[1]!r}") from None
        if count < 0:
            raise MeshFormatError(f"line {ln}: negative count")
        return count

    n_nodes = header("nodes")
    nodes = np.empty((n_nodes, 2))
    for k in range(n_nodes):
        ln, line = next_line()
        parts = line.split()
        if len(parts) != 2:
            raise MeshFormatError(f"line {ln}: expected 'x y'")
        try:
            nodes[k] = [float(parts[0]), float(parts[1])]
        except ValueError:
            raise MeshFormatError(f"line {ln}: bad coordinate") from None

    n_tris = header("triangles")
    triangles = np.empty((n_tris, 3), dtype=np.int64)
    tri_lines = np.empty(n_tris, dtype=np.int64)
    for k in range(n_tris):
        ln, line = next_line()
        parts = line.split()
        if len(parts) != 3:
            raise MeshFormatError(f"line {ln}: expected 'i j k'")
        try:
            triangles[k] = [int(p) for p in parts]
        except ValueError:
            raise MeshFormatError(f"line {ln}: bad node index") from None
        tri_lines[k] = ln

    n_edges = header("boundary")
    edges = np.empty((n_edges, 2), dtype=np.int64)
    tags = np.empty(n_edges, dtype=np.int64)
    for k in range(n_edges):
        ln, line = next_line()
        parts = line.split()
        if len(parts) != 3:
            raise MeshFormatError(f"line {ln}: expected 'i j TAG'")
        try:
            edges[k] = [int(parts[0]), int(parts[1])]
        except ValueError:
            raise MeshFormatError(f"line {ln}: bad node index") from None
        if parts[2] not in _TAG_VALUES:
            raise MeshFormatError(f"line {ln}: unknown tag {parts[2]!r}")
        tags[k] = _TAG_VALUES[parts[2]]

    # per-line diagnostics before handing off to Mesh validation
    for k in range(n_tris):
        tri = triangles[k]
        if tri.min() < 0 or tri.max() >= n_nodes:
            raise MeshFormatError(f"line {tri_lines[k]}: node index out of range")
        p = nodes[tri]
        area = 0.5 * np.cross(p[1] - p[0], p[2] - p[0])
        if area <= 0:
            raise MeshFormatError(f"line {tri_lines[k]}: non-positive area")
    return Mesh(nodes, triangles, edges, tags)
