"""P1 linearized-elasticity subproblems: assembly, boundary conditions,
solves, and error norms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .mesh import Mesh

__all__ = [
    "LameParams",
    "Field",
    "AnalyticField",
    "SparseSystem",
    "SolveError",
    "strain",
    "stress",
    "assemble",
    "apply_dirichlet",
    "solve",
    "DirichletSolver",
    "field_errors",
    "broken_norms",
    "linear_field",
    "constant_field",
    "manufactured_solution",
    "manufactured_forcing",
]


class SolveError(RuntimeError):
    """Linear solve failed its residual contract."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class LameParams:
    lam: float
    mu: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")


@dataclass
class Field:
    """Nodal vector-valued displacement coefficients over a mesh."""

    mesh: Mesh
    values: np.ndarray  # (N, 2)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_nodes, 2):
            raise ValueError("values shape does not match node count")


@dataclass
class AnalyticField:
    """Closed-form vector field with its exact Jacobian.

    ``value`` maps (K, 2) points to (K, 2) vectors; ``jacobian`` maps
    (K, 2) points to (K, 2, 2) matrices with row r the gradient of
    component r.
    """

    value: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]


@dataclass
class SparseSystem:
    """Assembled linear system; symmetric, SPD on free DOFs after
    Dirichlet elimination."""

    mesh: Mesh
    matrix: sp.csr_matrix
    rhs: np.ndarray


# -- pointwise tensor algebra ---------------------------------------------------


def strain(jacobian) -> np.ndarray:
    """Symmetric part of a displacement Jacobian: (J + J^T) / 2."""
    j = np.asarray(jacobian, dtype=float)
    return 0.5 * (j + np.swapaxes(j, -1, -2))


def stress(eps, p: LameParams) -> np.ndarray:
    """Isotropic stress lam * tr(eps) * I + 2 * mu * eps."""
    e = np.asarray(eps, dtype=float)
    tr = np.trace(e, axis1=-2, axis2=-1)
    out = 2.0 * p.mu * e
    out[..., 0, 0] += p.lam * tr
    out[..., 1, 1] += p.lam * tr
    return out


# -- quadrature rules -----------------------------------------------------------

# edge midpoints, degree-2 exact; used for load vectors
TRI_MID_BARY = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
TRI_MID_W = np.full(3, 1.0 / 3.0)

# 6-point degree-4 rule; used for error norms
_a1, _w1 = 0.445948490915965, 0.223381589678011
_a2, _w2 = 0.091576213509771, 0.109951743655322
TRI_D4_BARY = np.array(
    [
        [1 - 2 * _a1, _a1, _a1],
        [_a1, 1 - 2 * _a1, _a1],
        [_a1, _a1, 1 - 2 * _a1],
        [1 - 2 * _a2, _a2, _a2],
        [_a2, 1 - 2 * _a2, _a2],
        [_a2, _a2, 1 - 2 * _a2],
    ]
)
TRI_D4_W = np.array([_w1, _w1, _w1, _w2, _w2, _w2])

# 2-point Gauss on [0, 1]; exact for cubics
EDGE_G2_T = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
EDGE_G2_W = np.array([0.5, 0.5])


def _element_gradients(mesh: Mesh):
    """Per-triangle P1 basis gradients (M, 3, 2) and areas (M,)."""
    p = mesh.nodes[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    area2 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    g = np.empty_like(p)
    for a in range(3):
        e = p[:, (a + 2) % 3] - p[:, (a + 1) % 3]
        g[:, a, 0] = -e[:, 1]
        g[:, a, 1] = e[:, 0]
    g /= area2[:, None, None]
    return g, 0.5 * area2


def element_jacobians(field: Field) -> np.ndarray:
    """Constant per-triangle displacement Jacobians, (M, 2, 2)."""
    g, _ = _element_gradients(field.mesh)
    v = field.values[field.mesh.triangles]
    return np.einsum("mar,mad->mrd", v, g)


# -- assembly ---------------------------------------------------------------------


def assemble(mesh: Mesh, p: LameParams, f=None) -> SparseSystem:
    """Assemble the stiffness matrix and load vector.

    ``f`` may be None (zero load), a constant 2-vector, or a vectorized
    callable mapping (K, 2) points to (K, 2) load values.
    """
    rows, cols, vals = _kernels.assemble_triplets(
        mesh.nodes, mesh.triangles, p.lam, p.mu
    )
    n = 2 * mesh.n_nodes
    matrix = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()

    asym = np.abs(matrix - matrix.T).max()
    scale = np.abs(matrix).max()
    if scale > 0 and asym > 1e-12 * scale:
        raise AssertionError(f"assembled matrix asymmetry {asym:.3e}")

    rhs = np.zeros(n)
    if f is not None:
        if callable(f):
            fval = f
        else:
            const = np.asarray(f, dtype=float).reshape(2)
            fval = lambda pts: np.broadcast_to(const, (len(pts), 2))
        p_tri = mesh.nodes[mesh.triangles]
        areas = mesh.triangle_areas()
        rhs2 = rhs.reshape(-1, 2)
        for q, w in zip(TRI_MID_BARY, TRI_MID_W):
            pts = np.einsum("k,mkd->md", q, p_tri)
            fq = fval(pts)
            for a in range(3):
                np.add.at(rhs2, mesh.triangles[:, a], (w * q[a]) * areas[:, None] * fq)
    return SparseSystem(mesh, matrix, rhs)


def _constrained_dofs(mesh: Mesh, nodes) -> np.ndarray:
    idx = np.asarray(list(nodes), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= mesh.n_nodes):
        raise ValueError("constrained node index out of range")
    return np.stack([2 * idx, 2 * idx + 1], axis=1).ravel()


def apply_dirichlet(system: SparseSystem, mesh: Mesh, constrained, values) -> SparseSystem:
    """Pin the listed nodes to the given 2-vectors by symmetric elimination.

    ``values`` is (len(constrained), 2), aligned with the iteration order of
    ``constrained``.
    """
    cdofs = _constrained_dofs(mesh, constrained)
    if cdofs.size == 0:
        return SparseSystem(mesh, system.matrix.copy(), system.rhs.copy())
    vals = np.asarray(values, dtype=float).reshape(-1, 2)
    uc = np.zeros_like(system.rhs)
    uc[cdofs] = vals.ravel()
    rhs = system.rhs - system.matrix @ uc
    rhs[cdofs] = vals.ravel()
    keep = np.ones(system.rhs.shape[0])
    keep[cdofs] = 0.0
    dk = sp.diags(keep)
    pinned = np.zeros_like(keep)
    pinned[cdofs] = 1.0
    matrix = (dk @ system.matrix @ dk + sp.diags(pinned)).tocsr()
    return SparseSystem(mesh, matrix, rhs)


def solve(system: SparseSystem) -> Field:
    """Direct sparse solve with a binding residual check."""
    u = spla.spsolve(system.matrix.tocsc(), system.rhs)
    res = np.linalg.norm(system.matrix @ u - system.rhs)
    bnorm = np.linalg.norm(system.rhs)
    if res > 1e-10 * max(bnorm, 1.0):
        raise SolveError(f"solver residual {res:.3e} exceeds contract", res)
    return Field(system.mesh, u.reshape(-1, 2))


class DirichletSolver:
    """Factorize the Dirichlet-reduced operator once, then solve repeatedly
    for varying boundary values and interface load terms.

    The constrained node set (and hence the sparsity pattern) is fixed at
    construction; only boundary values and right-hand-side additions change
    between solves.
    """

    def __init__(self, system: SparseSystem, constrained):
        self.mesh = system.mesh
        self.constrained = np.asarray(list(constrained), dtype=np.int64)
        cdofs = _constrained_dofs(self.mesh, self.constrained)
        n = system.rhs.shape[0]
        free = np.ones(n, dtype=bool)
        free[cdofs] = False
        self._free = np.flatnonzero(free)
        self._cdofs = cdofs
        a = system.matrix.tocsc()
        self._a_ff = a[self._free][:, self._free].tocsc()
        self._a_fc = a[self._free][:, cdofs].tocsr()
        self._lu = spla.splu(self._a_ff)
        self._base_rhs = system.rhs.copy()

    def solve(self, boundary_values, extra_rhs=None) -> Field:
        """Solve with the constrained nodes pinned to ``boundary_values``
        ((n_constrained, 2), aligned with the constructor's node order);
        ``extra_rhs`` is an optional full-length load addition."""
        g = np.asarray(boundary_values, dtype=float).reshape(-1, 2).ravel()
        rhs = self._base_rhs if extra_rhs is None else self._base_rhs + extra_rhs
        bf = rhs[self._free] - self._a_fc @ g
        uf = self._lu.solve(bf)
        res = np.linalg.norm(self._a_ff @ uf - bf)
        if res > 1e-10 * max(np.linalg.norm(bf), 1.0):
            raise SolveError(f"solver residual {res:.3e} exceeds contract", res)
        u = np.empty(2 * self.mesh.n_nodes)
        u[self._free] = uf
        u[self._cdofs] = g
        return Field(self.mesh, u.reshape(-1, 2))


# -- error norms ------------------------------------------------------------------


def field_errors(field: Field, exact) -> tuple[float, float]:
    """L2 and full H1 errors of a P1 field against an analytic field,
    by degree-4 quadrature."""
    mesh = field.mesh
    p_tri = mesh.nodes[mesh.triangles]
    areas = mesh.triangle_areas()
    v_tri = field.values[mesh.triangles]

    pts = np.einsum("qk,mkd->mqd", TRI_D4_BARY, p_tri)
    uh = np.einsum("qk,mkr->mqr", TRI_D4_BARY, v_tri)
    flat = pts.reshape(-1, 2)
    ue = exact.value(flat).reshape(uh.shape)
    je = exact.jacobian(flat).reshape(pts.shape[0], len(TRI_D4_W), 2, 2)
    jh = element_jacobians(field)

    diff2 = ((uh - ue) ** 2).sum(axis=2)
    l2_sq = float(np.einsum("q,mq,m->", TRI_D4_W, diff2, areas))
    gdiff2 = ((jh[:, None, :, :] - je) ** 2).sum(axis=(2, 3))
    grad_sq = float(np.einsum("q,mq,m->", TRI_D4_W, gdiff2, areas))
    return np.sqrt(l2_sq), np.sqrt(l2_sq + grad_sq)


def broken_norms(fields: tuple[Field, Field], exact) -> tuple[float, float]:
    """Root-sum-square of per-subdomain L2 and H1 errors."""
    l2s, h1s = field_errors(fields[0], exact)
    l2m, h1m = field_errors(fields[1], exact)
    return float(np.hypot(l2s, l2m)), float(np.hypot(h1s, h1m))


# -- analytic fields ---------------------------------------------------------------


def linear_field(a, b) -> AnalyticField:
    """u(x) = A x + b for a constant 2x2 matrix A and 2-vector b."""
    a = np.asarray(a, dtype=float).reshape(2, 2)
    b = np.asarray(b, dtype=float).reshape(2)

    def value(pts):
        return np.asarray(pts, dtype=float) @ a.T + b

    def jacobian(pts):
        return np.broadcast_to(a, (len(pts), 2, 2)).copy()

    return AnalyticField(value, jacobian)


def constant_field(c) -> AnalyticField:
    return linear_field(np.zeros((2, 2)), c)


def manufactured_solution() -> AnalyticField:
    """Smooth benchmark solution with equal components sin(pi x) sin(2 pi y)."""

    def value(pts):
        pts = np.asarray(pts, dtype=float)
        s = np.sin(np.pi * pts[:, 0]) * np.sin(2 * np.pi * pts[:, 1])
        return np.stack([s, s], axis=1)

    def jacobian(pts):
        pts = np.asarray(pts, dtype=float)
        sx = np.pi * np.cos(np.pi * pts[:, 0]) * np.sin(2 * np.pi * pts[:, 1])
        sy = 2 * np.pi * np.sin(np.pi * pts[:, 0]) * np.cos(2 * np.pi * pts[:, 1])
        row = np.stack([sx, sy], axis=1)
        return np.stack([row, row], axis=1)

    return AnalyticField(value, jacobian)


def manufactured_forcing(p: LameParams):
    """Body force -div(sigma(u)) of the manufactured solution, in closed form."""
    lam, mu = p.lam, p.mu

    def force(pts):
        pts = np.asarray(pts, dtype=float)
        s = np.sin(np.pi * pts[:, 0]) * np.sin(2 * np.pi * pts[:, 1])
        c = np.cos(np.pi * pts[:, 0]) * np.cos(2 * np.pi * pts[:, 1])
        f1 = np.pi**2 * ((lam + 6 * mu) * s - 2 * (lam + mu) * c)
        f2 = np.pi**2 * ((4 * lam + 9 * mu) * s - 2 * (lam + mu) * c)
        return np.stack([f1, f2], axis=1)

    return force
