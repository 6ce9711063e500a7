"""Exact point-to-triangle-mesh distance queries.

The closest-point routine is the standard Voronoi-region walk (vertex, edge
and face regions checked in turn), vectorized over point/triangle pairs.
``MeshDistanceIndex`` makes the query exact and fast for large meshes: a
kd-tree over triangle centroids supplies a certified candidate set (any
triangle that could beat the current best must have its centroid within
best + r_max of the query), then exact distances settle the winner.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree


def closest_point_on_triangles(points: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Closest point on triangle i to point i, for paired inputs.

    points: (n, 3); triangles: (n, 3, 3). Returns (n, 3).
    """
    p = np.asarray(points, dtype=np.float64)
    tri = np.asarray(triangles, dtype=np.float64)
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]

    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)

    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)

    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    out = np.empty_like(p)
    done = np.zeros(len(p), dtype=bool)

    def settle(mask, value):
        fresh = mask & ~done
        out[fresh] = value[fresh]
        done[fresh] = True

    # vertex regions
    settle((d1 <= 0) & (d2 <= 0), a)
    settle((d3 >= 0) & (d4 <= d3), b)
    settle((d6 >= 0) & (d5 <= d6), c)

    # edge AB
    vc = d1 * d4 - d3 * d2
    denom = d1 - d3
    v = np.divide(d1, denom, out=np.zeros_like(d1), where=denom != 0)
    settle((vc <= 0) & (d1 >= 0) & (d3 <= 0), a + v[:, None] * ab)

    # edge AC
    vb = d5 * d2 - d1 * d6
    denom = d2 - d6
    w = np.divide(d2, denom, out=np.zeros_like(d2), where=denom != 0)
    settle((vb <= 0) & (d2 >= 0) & (d6 <= 0), a + w[:, None] * ac)

    # edge BC
    va = d3 * d6 - d5 * d4
    denom = (d4 - d3) + (d5 - d6)
    w = np.divide(d4 - d3, denom, out=np.zeros_like(d4), where=denom != 0)
    settle((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0), b + w[:, None] * (c - b))

    # interior
    total = va + vb + vc
    inv = np.divide(1.0, total, out=np.zeros_like(total), where=total != 0)
    v = vb * inv
    w = vc * inv
    settle(np.ones(len(p), dtype=bool), a + v[:, None] * ab + w[:, None] * ac)
    return out


class MeshDistanceIndex:
    """Exact nearest-point queries against a fixed triangle soup."""

    # below this many triangles a brute-force sweep beats tree bookkeeping
    BRUTE_FORCE_LIMIT = 24

    def __init__(self, vertices: np.ndarray, faces: np.ndarray):
        vertices = np.asarray(vertices, dtype=np.float64)
        faces = np.asarray(faces, dtype=np.int64)
        if len(faces) == 0:
            raise ValueError("mesh has no triangles")
        self.triangles = vertices[faces]
        self.centroids = self.triangles.mean(axis=1)
        # farthest vertex-to-centroid distance bounds how far a triangle
        # can reach beyond its centroid
        self.spreads = np.linalg.norm(
            self.triangles - self.centroids[:, None, :], axis=2).max(axis=1)
        self.max_spread = float(self.spreads.max())
        self._tree = cKDTree(self.centroids) if len(faces) > self.BRUTE_FORCE_LIMIT else None

    def query(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Distances and closest surface points for (n, 3) queries."""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if self._tree is None:
            return self._query_brute(points)
        return self._query_tree(points)

    def _query_brute(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n, m = len(points), len(self.triangles)
        best_d2 = np.full(n, np.inf)
        best_cp = np.zeros((n, 3))
        for t in range(m):
            tri = np.broadcast_to(self.triangles[t], (n, 3, 3))
            cp = closest_point_on_triangles(points, tri)
            d2 = np.einsum("ij,ij->i", points - cp, points - cp)
            better = d2 < best_d2
            best_d2[better] = d2[better]
            best_cp[better] = cp[better]
        return np.sqrt(best_d2), best_cp

    def _query_tree(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = len(points)
        m = len(self.triangles)
        best_d = np.empty(n)
        best_cp = np.empty((n, 3))

        remaining = np.arange(n)
        k = 16
        while len(remaining):
            kk = min(k, m)
            pts = points[remaining]
            r = len(pts)
            d_c, idx = self._tree.query(pts, k=kk)
            d_c = d_c.reshape(r, kk)
            idx = idx.reshape(r, kk)

            # walk candidates in centroid order, tightening the exact upper
            # bound as we go; most later columns fall to the pruning test
            cp_best = closest_point_on_triangles(pts, self.triangles[idx[:, 0]])
            diff = pts - cp_best
            upper = np.sqrt(np.einsum("ij,ij->i", diff, diff))
            for j in range(1, kk):
                col = d_c[:, j]
                if (col >= upper + self.max_spread).all():
                    break   # columns only get farther, none can win anymore
                rows = np.flatnonzero(col < upper + self.spreads[idx[:, j]])
                if not len(rows):
                    continue
                cp = closest_point_on_triangles(pts[rows],
                                                self.triangles[idx[rows, j]])
                diff = pts[rows] - cp
                d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
                better = d < upper[rows]
                upper[rows[better]] = d[better]
                cp_best[rows[better]] = cp[better]

            best_d[remaining] = upper
            best_cp[remaining] = cp_best
            if kk == m:
                break
            # triangles past the kk-th centroid are at least this far away
            certified = upper <= d_c[:, -1] - self.max_spread
            remaining = remaining[~certified]
            k *= 16
        return best_d, best_cp
