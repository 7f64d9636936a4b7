# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementations of the hot kernels."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def assemble_triplets(double[:, ::1] nodes, long long[:, ::1] triangles,
                      double lam, double mu):
    """COO triplets of the P1 vector-elasticity stiffness matrix."""
    cdef Py_ssize_t m = triangles.shape[0]
    rows_arr = np.empty(36 * m, dtype=np.int64)
    cols_arr = np.empty(36 * m, dtype=np.int64)
    vals_arr = np.empty(36 * m, dtype=np.float64)
    cdef long long[::1] rows = rows_arr
    cdef long long[::1] cols = cols_arr
    cdef double[::1] vals = vals_arr

    cdef Py_ssize_t t, a, b, i, j, pos
    cdef long long n0, n1, n2
    cdef double x0, y0, x1, y1, x2, y2, area2, area
    cdef double g[3][2]
    cdef double ex, ey, dot, val
    cdef long long dof[6]

    pos = 0
    for t in range(m):
        n0 = triangles[t, 0]
        n1 = triangles[t, 1]
        n2 = triangles[t, 2]
        x0 = nodes[n0, 0]; y0 = nodes[n0, 1]
        x1 = nodes[n1, 0]; y1 = nodes[n1, 1]
        x2 = nodes[n2, 0]; y2 = nodes[n2, 1]
        area2 = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area2 <= 0.0:
            raise ValueError(f"triangle {t} is degenerate (non-positive area)")
        area = 0.5 * area2
        # grad phi_a = rot90(edge opposite a) / (2 area)
        g[0][0] = -(y2 - y1) / area2; g[0][1] = (x2 - x1) / area2
        g[1][0] = -(y0 - y2) / area2; g[1][1] = (x0 - x2) / area2
        g[2][0] = -(y1 - y0) / area2; g[2][1] = (x1 - x0) / area2
        dof[0] = 2 * n0; dof[1] = 2 * n0 + 1
        dof[2] = 2 * n1; dof[3] = 2 * n1 + 1
        dof[4] = 2 * n2; dof[5] = 2 * n2 + 1
        for a in range(3):
            for i in range(2):
                for b in range(3):
                    dot = g[a][0] * g[b][0] + g[a][1] * g[b][1]
                    for j in range(2):
                        val = lam * g[a][i] * g[b][j] + mu * g[a][j] * g[b][i]
                        if i == j:
                            val += mu * dot
                        rows[pos] = dof[2 * a + i]
                        cols[pos] = dof[2 * b + j]
                        vals[pos] = area * val
                        pos += 1
    return rows_arr, cols_arr, vals_arr


def locate_points(double[:, ::1] nodes, long long[:, ::1] triangles,
                  long long[:, ::1] neighbors, double[:, ::1] points,
                  long long[::1] starts, double tol=1e-12, int max_steps=0):
    """Locate points by walking the triangulation.

    Returns (tri, bary, status); status 0 = inside, 1 = walk exited through a
    boundary edge (point outside, values extrapolate from the last triangle),
    2 = step cap reached.
    """
    cdef Py_ssize_t n_pts = points.shape[0]
    cdef Py_ssize_t m = triangles.shape[0]
    tri_arr = np.empty(n_pts, dtype=np.int64)
    bary_arr = np.zeros((n_pts, 3), dtype=np.float64)
    status_arr = np.empty(n_pts, dtype=np.uint8)
    cdef long long[::1] tri = tri_arr
    cdef double[:, ::1] bary = bary_arr
    cdef unsigned char[::1] status = status_arr

    if max_steps <= 0:
        max_steps = <int>(4.0 * np.sqrt(m)) + 100

    cdef Py_ssize_t k, step, worst
    cdef long long t, nxt, n0, n1, n2
    cdef double px, py, x0, y0, v0x, v0y, v1x, v1y, v2x, v2y
    cdef double det, b0, b1, b2, bmin

    for k in range(n_pts):
        t = starts[k]
        px = points[k, 0]
        py = points[k, 1]
        status[k] = 2
        for step in range(max_steps):
            n0 = triangles[t, 0]; n1 = triangles[t, 1]; n2 = triangles[t, 2]
            x0 = nodes[n0, 0]; y0 = nodes[n0, 1]
            v0x = nodes[n1, 0] - x0; v0y = nodes[n1, 1] - y0
            v1x = nodes[n2, 0] - x0; v1y = nodes[n2, 1] - y0
            v2x = px - x0; v2y = py - y0
            det = v0x * v1y - v0y * v1x
            b1 = (v2x * v1y - v2y * v1x) / det
            b2 = (v0x * v2y - v0y * v2x) / det
            b0 = 1.0 - b1 - b2
            worst = 0
            bmin = b0
            if b1 < bmin:
                worst = 1
                bmin = b1
            if b2 < bmin:
                worst = 2
                bmin = b2
            if bmin >= -tol:
                status[k] = 0
                break
            nxt = neighbors[t, worst]
            if nxt < 0:
                status[k] = 1
                break
            t = nxt
        tri[k] = t
        bary[k, 0] = b0
        bary[k, 1] = b1
        bary[k, 2] = b2
    return tri_arr, bary_arr, status_arr
