"""Numpy implementations of the hot kernels (fallback backend)."""

from __future__ import annotations

import numpy as np


def assemble_triplets(nodes, triangles, lam, mu):
    """COO triplets of the P1 vector-elasticity stiffness matrix.

    Returns (rows, cols, vals) with 36 entries per triangle in local
    (test node, test component, trial node, trial component) order, the same
    ordering the compiled backend produces.
    """
    p = nodes[triangles]  # (M, 3, 2)
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    area2 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    if np.any(area2 <= 0):
        bad = int(np.flatnonzero(area2 <= 0)[0])
        raise ValueError(f"triangle {bad} is degenerate (non-positive area)")
    area = 0.5 * area2
    # constant P1 gradients: grad phi_a = rot90(edge opposite a) / (2 area)
    g = np.empty_like(p)
    for a in range(3):
        e = p[:, (a + 2) % 3] - p[:, (a + 1) % 3]
        g[:, a, 0] = -e[:, 1]
        g[:, a, 1] = e[:, 0]
    g /= area2[:, None, None]

    ke = lam * np.einsum("m,mai,mbj->maibj", area, g, g)
    ke += mu * np.einsum("m,maj,mbi->maibj", area, g, g)
    dots = np.einsum("mak,mbk->mab", g, g)
    ke += mu * np.einsum("m,mab,ij->maibj", area, dots, np.eye(2))

    dof = (2 * triangles[:, :, None] + np.arange(2)[None, None, :]).reshape(-1, 6)
    rows = np.repeat(dof, 6, axis=1).ravel()
    cols = np.tile(dof, (1, 6)).ravel()
    return rows, cols, ke.reshape(-1)


def locate_points(nodes, triangles, neighbors, points, starts, tol=1e-12, max_steps=0):
    """Locate points by walking the triangulation (vectorized over points).

    Returns (tri, bary, status); status 0 = inside, 1 = walk exited through a
    boundary edge (point outside, values extrapolate from the last triangle),
    2 = step cap reached.
    """
    pts = np.asarray(points, dtype=float)
    n_pts = len(pts)
    if max_steps <= 0:
        max_steps = int(4 * np.sqrt(len(triangles))) + 100
    tri = np.array(starts, dtype=np.int64).copy()
    status = np.full(n_pts, 2, dtype=np.uint8)
    bary = np.zeros((n_pts, 3))
    active = np.arange(n_pts)
    for _ in range(max_steps):
        p = nodes[triangles[tri[active]]]
        v0 = p[:, 1] - p[:, 0]
        v1 = p[:, 2] - p[:, 0]
        v2 = pts[active] - p[:, 0]
        det = v0[:, 0] * v1[:, 1] - v0[:, 1] * v1[:, 0]
        b1 = (v2[:, 0] * v1[:, 1] - v2[:, 1] * v1[:, 0]) / det
        b2 = (v0[:, 0] * v2[:, 1] - v0[:, 1] * v2[:, 0]) / det
        b = np.column_stack([1.0 - b1 - b2, b1, b2])
        worst = np.argmin(b, axis=1)
        inside = b[np.arange(len(b)), worst] >= -tol
        bary[active[inside]] = b[inside]
        status[active[inside]] = 0
        moving = ~inside
        nxt = neighbors[tri[active[moving]], worst[moving]]
        hit_boundary = nxt < 0
        stuck = active[moving][hit_boundary]
        bary[stuck] = b[moving][hit_boundary]
        status[stuck] = 1
        tri[active[moving][~hit_boundary]] = nxt[~hit_boundary]
        active = active[moving][~hit_boundary]
        if len(active) == 0:
            break
    return tri, bary, status
