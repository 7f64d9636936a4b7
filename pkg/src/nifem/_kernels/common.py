"""Shared helpers for the kernel backends."""

from __future__ import annotations

import numpy as np


def build_neighbors(triangles: np.ndarray, n_nodes: int) -> np.ndarray:
    """Triangle adjacency: neighbors[t, k] is the triangle across the edge
    opposite local vertex k, or -1 on the boundary."""
    t = np.asarray(triangles, dtype=np.int64)
    m = t.shape[0]
    # edge opposite local vertex k is (t[:, k+1], t[:, k+2]) cyclically
    edges = np.concatenate([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=0)
    owner = np.tile(np.arange(m, dtype=np.int64), 3)
    local = np.repeat(np.arange(3, dtype=np.int64), m)
    keys = np.minimum(edges[:, 0], edges[:, 1]) * n_nodes + np.maximum(
        edges[:, 0], edges[:, 1]
    )
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    owner = owner[order]
    local = local[order]
    neighbors = np.full((m, 3), -1, dtype=np.int64)
    same = keys[:-1] == keys[1:]
    idx = np.flatnonzero(same)
    neighbors[owner[idx], local[idx]] = owner[idx + 1]
    neighbors[owner[idx + 1], local[idx + 1]] = owner[idx]
    return neighbors


def brute_force_locate(nodes, triangles, points, tol=1e-12):
    """Scan every triangle for every point; used as the robustness fallback."""
    pts = np.asarray(points, dtype=float)
    p = nodes[triangles]
    v0 = p[:, 1] - p[:, 0]
    v1 = p[:, 2] - p[:, 0]
    det = v0[:, 0] * v1[:, 1] - v0[:, 1] * v1[:, 0]
    tri = np.empty(len(pts), dtype=np.int64)
    bary = np.empty((len(pts), 3))
    for k, pt in enumerate(pts):
        v2 = pt[None, :] - p[:, 0]
        b1 = (v2[:, 0] * v1[:, 1] - v2[:, 1] * v1[:, 0]) / det
        b2 = (v0[:, 0] * v2[:, 1] - v0[:, 1] * v2[:, 0]) / det
        b0 = 1.0 - b1 - b2
        score = np.minimum(b0, np.minimum(b1, b2))
        best = int(np.argmax(score))
        tri[k] = best
        bary[k] = (b0[best], b1[best], b2[best])
    return tri, bary
