"""Coupling operators between the two discrete interfaces.

Nearest-neighbor node maps pair the noncoincident interface polylines;
Taylor expansions built from the recovered Jacobian extend slave-side
displacement and stress data across the gap to the master interface.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .elasticity import Field, LameParams, strain, stress
from .mesh import BoundaryTag, Mesh, interface_nodes
from .recovery import RecoveredJacobian, model_gradient

__all__ = [
    "MapDirection",
    "InterfaceMap",
    "MasterTraction",
    "nearest_neighbor_map",
    "taylor_extend_displacement",
    "taylor_extend_jacobian",
    "extended_stress",
    "neumann_boundary_term",
    "trace_norm",
]


class MapDirection(Enum):
    SLAVE_TO_MASTER = "slave_to_master"
    MASTER_TO_SLAVE = "master_to_slave"


@dataclass
class InterfaceMap:
    """Per-node nearest-neighbor pairing from one interface to the other.

    ``source_nodes`` are ordered along the source polyline; ``offsets`` are
    target minus source coordinates.
    """

    direction: MapDirection
    source_nodes: np.ndarray
    target_nodes: np.ndarray
    offsets: np.ndarray  # (K, 2)
    max_distance: float


@dataclass
class MasterTraction:
    """Extended stress at master interface nodes with per-edge outward
    normals of the master interface polyline."""

    nodes: np.ndarray  # ordered master interface nodes
    sigma: np.ndarray  # (K, 2, 2)
    edges: np.ndarray  # (E, 2) node index pairs
    normals: np.ndarray  # (E, 2) unit outward normals


def nearest_neighbor_map(source: Mesh, target: Mesh, direction: MapDirection) -> InterfaceMap:
    """Pair each source interface node with its nearest target interface
    node (ties to the lowest target node index)."""
    src = interface_nodes(source)
    tgt = interface_nodes(target)
    tgt_sorted = np.sort(tgt)  # argmin tie-break lands on the lowest index
    sp = source.nodes[src]
    tp = target.nodes[tgt_sorted]
    d2 = ((sp[:, None, :] - tp[None, :, :]) ** 2).sum(axis=2)
    pick = np.argmin(d2, axis=1)
    targets = tgt_sorted[pick]
    offsets = target.nodes[targets] - sp
    return InterfaceMap(
        direction=direction,
        source_nodes=src,
        target_nodes=targets,
        offsets=offsets,
        max_distance=float(np.sqrt((offsets**2).sum(axis=1)).max()),
    )


def taylor_extend_displacement(u_s: Field, jac: RecoveredJacobian, imap: InterfaceMap) -> np.ndarray:
    """First-order extension of the slave displacement toward the paired
    master nodes, evaluated per slave interface node:
    u(x_s) + J(x_s) (x_m_hat - x_s)."""
    if imap.direction is not MapDirection.SLAVE_TO_MASTER:
        raise ValueError("expected a slave-to-master map")
    rows = [jac.index[int(n)] for n in imap.source_nodes]
    j = jac.jac[rows]
    base = u_s.values[imap.source_nodes]
    return base + np.einsum("krc,kc->kr", j, imap.offsets)


def taylor_extend_jacobian(jac: RecoveredJacobian, imap: InterfaceMap) -> np.ndarray:
    """Extend the recovered slave Jacobian to each master interface node by
    expanding the local quadratic models about the paired slave node."""
    if imap.direction is not MapDirection.MASTER_TO_SLAVE:
        raise ValueError("expected a master-to-slave map")
    rows = [jac.index[int(n)] for n in imap.target_nodes]
    coeffs = jac.coeffs[rows]  # (K, 2, 6)
    # offset = x_s_hat - x_m, so the evaluation displacement is its negation
    disp = -imap.offsets
    out = np.empty((len(rows), 2, 2))
    for r in range(2):
        out[:, r, :] = model_gradient(coeffs[:, r, :], disp)
    return out


def _interface_edges_with_normals(master: Mesh, return_owners: bool = False):
    """Interface edges of the master mesh with outward unit normals,
    oriented away from the adjacent master triangle."""
    edges = master.boundary_edges[master.boundary_tags == BoundaryTag.INTERFACE]
    n_nodes = master.n_nodes
    t = master.triangles
    all_keys = np.concatenate(
        [
            np.minimum(t[:, (k + 1) % 3], t[:, (k + 2) % 3]) * n_nodes
            + np.maximum(t[:, (k + 1) % 3], t[:, (k + 2) % 3])
            for k in range(3)
        ]
    )
    all_owner = np.tile(np.arange(len(t), dtype=np.int64), 3)
    order = np.argsort(all_keys, kind="stable")
    sorted_keys = all_keys[order]
    sorted_owner = all_owner[order]

    edge_keys = np.minimum(edges[:, 0], edges[:, 1]) * n_nodes + np.maximum(
        edges[:, 0], edges[:, 1]
    )
    pos = np.searchsorted(sorted_keys, edge_keys)
    owners = sorted_owner[pos]

    normals = np.empty((len(edges), 2))
    for e, (a, b) in enumerate(edges):
        tri = owners[e]
        tang = master.nodes[b] - master.nodes[a]
        n = np.array([tang[1], -tang[0]])
        n /= np.linalg.norm(n)
        mid = 0.5 * (master.nodes[a] + master.nodes[b])
        centroid = master.nodes[t[tri]].mean(axis=0)
        if np.dot(n, centroid - mid) > 0:
            n = -n
        normals[e] = n
    if return_owners:
        return edges, normals, owners
    return edges, normals


def extended_stress(jm: np.ndarray, p_s: LameParams, master: Mesh) -> MasterTraction:
    """Stress built from the extended strain at each master interface node,
    using the slave-side material parameters."""
    nodes = interface_nodes(master)
    jm = np.asarray(jm, dtype=float)
    if jm.shape != (len(nodes), 2, 2):
        raise ValueError("extended Jacobian shape does not match master interface")
    sigma = stress(strain(jm), p_s)
    edges, normals = _interface_edges_with_normals(master)
    return MasterTraction(nodes=nodes, sigma=sigma, edges=edges, normals=normals)


def neumann_boundary_term(traction: MasterTraction, master: Mesh) -> np.ndarray:
    """Natural-boundary load on the master interface: the nodal tractions
    are interpolated linearly along each edge and integrated against the P1
    basis with two-point Gauss quadrature.  Returns a full-length (2N,)
    load-vector contribution."""
    from .elasticity import EDGE_G2_T, EDGE_G2_W

    node_row = {int(n): k for k, n in enumerate(traction.nodes)}
    rhs = np.zeros(2 * master.n_nodes)
    for (a, b), n_e in zip(traction.edges, traction.normals):
        length = np.linalg.norm(master.nodes[b] - master.nodes[a])
        ta = traction.sigma[node_row[int(a)]] @ n_e
        tb = traction.sigma[node_row[int(b)]] @ n_e
        for t, w in zip(EDGE_G2_T, EDGE_G2_W):
            tq = (1.0 - t) * ta + t * tb
            rhs[2 * a : 2 * a + 2] += w * length * (1.0 - t) * tq
            rhs[2 * b : 2 * b + 2] += w * length * t * tq
    return rhs


def trace_norm(mesh: Mesh, ordered_nodes: np.ndarray, values: np.ndarray) -> float:
    """L2 norm of nodal vector data along a polyline, by the P1 trace mass
    matrix (edge-length weighted)."""
    v = np.asarray(values, dtype=float)
    p = mesh.nodes[ordered_nodes]
    lengths = np.linalg.norm(np.diff(p, axis=0), axis=1)
    a = v[:-1]
    b = v[1:]
    per_edge = ((a * a).sum(1) + (a * b).sum(1) + (b * b).sum(1)) / 3.0
    return float(np.sqrt((lengths * per_edge).sum()))
