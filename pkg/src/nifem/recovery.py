"""Superconvergent nodal gradient recovery.

Each recovery node gets an element patch grown by star expansion until it
holds more than six nodes; a quadratic is fitted over the patch by least
squares in coordinates centered at the node, and the fit's gradient at the
center is the recovered gradient.  The fit coefficients also provide exact
first and second derivatives of the local quadratic model, which the
interface extension operators consume.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .elasticity import Field
from .mesh import BoundaryTag, Mesh, interface_nodes

__all__ = [
    "RecoveryError",
    "ElementPatch",
    "RecoveryRegion",
    "RecoveredJacobian",
    "build_patch",
    "fit_quadratic",
    "build_recovery_region",
    "recover_jacobian",
    "model_gradient",
]

_PATCH_MIN_NODES = 7  # strictly more than 6 nodes, center included
_COND_LIMIT = 1e12


class RecoveryError(RuntimeError):
    pass


@dataclass
class ElementPatch:
    """Star-expanded fitting stencil around a center node."""

    center: int
    triangles: np.ndarray  # member triangle indices
    nodes: np.ndarray  # member node indices, center included
    coords: np.ndarray  # (len(nodes), 2) node coordinates
    center_coord: np.ndarray
    prev_node_count: int  # card of the previous expansion level


@dataclass
class RecoveryRegion:
    """Triangles near the slave interface where recovery is defined:
    every triangle touching an interface node, plus the closure pulled in
    by those nodes' patches."""

    interface_nodes: np.ndarray  # ordered along the polyline
    triangles: np.ndarray
    patches: dict[int, ElementPatch]
    operators: dict[int, np.ndarray] = field(default_factory=dict)


@dataclass
class RecoveredJacobian:
    """Recovered displacement gradients at the recovery nodes.

    ``jac[k]`` is the 2x2 recovered Jacobian at ``nodes[k]`` (row r the
    gradient of component r); ``coeffs[k, r]`` holds the six quadratic-model
    coefficients of component r in coordinates centered at the node.
    """

    nodes: np.ndarray
    jac: np.ndarray  # (K, 2, 2)
    coeffs: np.ndarray  # (K, 2, 6)

    def __post_init__(self):
        self.index = {int(n): k for k, n in enumerate(self.nodes)}

    def at(self, node: int) -> np.ndarray:
        return self.jac[self.index[int(node)]]


def _node_triangle_incidence(mesh: Mesh):
    """CSR-style (indptr, tris) giving the triangles incident to each node."""
    owner = np.repeat(np.arange(mesh.n_triangles, dtype=np.int64), 3)
    nodes = mesh.triangles.ravel()
    order = np.argsort(nodes, kind="stable")
    counts = np.bincount(nodes, minlength=mesh.n_nodes)
    indptr = np.concatenate([[0], np.cumsum(counts)])
    return indptr, owner[order]


def _tris_touching(incidence, node_set):
    indptr, owner = incidence
    parts = [owner[indptr[n] : indptr[n + 1]] for n in node_set]
    return np.unique(np.concatenate(parts))


def _build_patch(mesh: Mesh, incidence, z0: int) -> ElementPatch:
    nodes = np.array([z0], dtype=np.int64)
    prev_count = 1
    while True:
        tris = _tris_touching(incidence, nodes)
        new_nodes = np.unique(mesh.triangles[tris])
        if len(new_nodes) >= _PATCH_MIN_NODES:
            return ElementPatch(
                center=int(z0),
                triangles=tris,
                nodes=new_nodes,
                coords=mesh.nodes[new_nodes],
                center_coord=mesh.nodes[z0],
                prev_node_count=prev_count,
            )
        if len(new_nodes) == len(nodes):
            raise RecoveryError(
                f"mesh exhausted before node {z0} gathered {_PATCH_MIN_NODES} patch nodes"
            )
        prev_count = len(new_nodes)
        nodes = new_nodes


def build_patch(mesh: Mesh, z0: int) -> ElementPatch:
    """Element patch of ``z0``: star levels grown until more than six nodes."""
    if not 0 <= z0 < mesh.n_nodes:
        raise ValueError("node index out of range")
    return _build_patch(mesh, _node_triangle_incidence(mesh), z0)


def _expand_patch(mesh: Mesh, incidence, patch: ElementPatch) -> ElementPatch:
    tris = _tris_touching(incidence, patch.nodes)
    nodes = np.unique(mesh.triangles[tris])
    if len(nodes) == len(patch.nodes):
        raise RecoveryError(f"cannot expand patch of node {patch.center} further")
    return ElementPatch(
        center=patch.center,
        triangles=tris,
        nodes=nodes,
        coords=mesh.nodes[nodes],
        center_coord=patch.center_coord,
        prev_node_count=len(patch.nodes),
    )


def _design_matrix(patch: ElementPatch, scale: float) -> np.ndarray:
    d = (patch.coords - patch.center_coord) / scale
    x, y = d[:, 0], d[:, 1]
    return np.column_stack([np.ones(len(d)), x, y, x * x, x * y, y * y])


def _fit_operator(patch: ElementPatch) -> np.ndarray:
    """(6, m) matrix mapping patch nodal values to unscaled fit coefficients.

    Coordinates are scaled by the patch radius before forming the normal
    equations; the coefficients are unscaled afterward, so they refer to the
    plain centered basis [1, x, y, x^2, xy, y^2].
    """
    scale = np.linalg.norm(patch.coords - patch.center_coord, axis=1).max()
    if scale <= 0:
        raise RecoveryError(f"degenerate patch at node {patch.center}")
    a = _design_matrix(patch, scale)
    ata = a.T @ a
    if np.linalg.cond(ata) > _COND_LIMIT:
        raise RecoveryError(f"rank-deficient patch at node {patch.center}")
    op = np.linalg.solve(ata, a.T)
    unscale = np.array([1.0, scale, scale, scale**2, scale**2, scale**2])
    return op / unscale[:, None]


def fit_quadratic(patch: ElementPatch, values) -> np.ndarray:
    """Least-squares quadratic coefficients of scalar nodal ``values`` over
    the patch, in the basis [1, x, y, x^2, xy, y^2] centered at the patch
    center.  ``values`` must be indexable by global node index."""
    if len(patch.nodes) < 6:
        raise RecoveryError("patch too small for a quadratic fit")
    d = np.asarray(values, dtype=float)[patch.nodes]
    return _fit_operator(patch) @ d


def model_gradient(coeffs: np.ndarray, offset) -> np.ndarray:
    """Gradient of the quadratic model at displacement ``offset`` from its
    center; works on stacked (…, 6) coefficient arrays."""
    c = np.asarray(coeffs, dtype=float)
    off = np.asarray(offset, dtype=float)
    dx, dy = off[..., 0], off[..., 1]
    gx = c[..., 1] + 2.0 * c[..., 3] * dx + c[..., 4] * dy
    gy = c[..., 2] + c[..., 4] * dx + 2.0 * c[..., 5] * dy
    return np.stack([gx, gy], axis=-1)


def build_recovery_region(mesh: Mesh) -> RecoveryRegion:
    """Patches and fit operators for every interface node of ``mesh``."""
    iface = interface_nodes(mesh)
    incidence = _node_triangle_incidence(mesh)
    strip = _tris_touching(incidence, iface)
    patches = {}
    operators = {}
    tri_sets = [strip]
    for z0 in iface:
        patch = _build_patch(mesh, incidence, int(z0))
        try:
            op = _fit_operator(patch)
        except RecoveryError:
            patch = _expand_patch(mesh, incidence, patch)
            op = _fit_operator(patch)
        patches[int(z0)] = patch
        operators[int(z0)] = op
        tri_sets.append(patch.triangles)
    region = RecoveryRegion(
        interface_nodes=iface,
        triangles=np.unique(np.concatenate(tri_sets)),
        patches=patches,
        operators=operators,
    )
    return region


def recover_jacobian(mesh: Mesh, fld: Field, region: RecoveryRegion) -> RecoveredJacobian:
    """Recovered 2x2 Jacobian (and quadratic models) at the region's
    interface nodes."""
    if fld.mesh is not mesh:
        raise ValueError("field is not defined on the given mesh")
    k = len(region.interface_nodes)
    jac = np.empty((k, 2, 2))
    coeffs = np.empty((k, 2, 6))
    for i, z0 in enumerate(region.interface_nodes):
        patch = region.patches[int(z0)]
        op = region.operators[int(z0)]
        local = fld.values[patch.nodes]  # (m, 2)
        c = op @ local  # (6, 2)
        coeffs[i] = c.T
        jac[i, 0] = c[1:3, 0]
        jac[i, 1] = c[1:3, 1]
    return RecoveredJacobian(nodes=region.interface_nodes.copy(), jac=jac, coeffs=coeffs)
