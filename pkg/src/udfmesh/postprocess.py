"""Cleanup of raw extractions: facet pruning and border smoothing."""

from __future__ import annotations

import numpy as np

from .fields import UdfField
from .mesh import TriMesh


def remove_spurious_facets(mesh: TriMesh, field: UdfField, tol: float) -> TriMesh:
    """Drop faces that the field itself disowns.

    Cells with opposing gradients that never meet the zero set (between two
    sheets, or just past a border) emit facets far from any surface;
    re-evaluating the field at the vertices exposes them. A face survives
    only if all three of its vertices sit within ``tol`` of the surface.
    Orphaned vertices are dropped and the mesh reindexed.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if mesh.is_empty():
        return mesh.copy()
    near = field.eval(mesh.vertices) <= tol
    keep = near[mesh.faces].all(axis=1)
    return mesh.select_faces(keep)


def smooth_borders(mesh: TriMesh, steps: int = 5, weight: float = 0.5) -> TriMesh:
    """Relax jagged open borders with curve-Laplacian steps.

    Each step moves every border vertex that has exactly two border-edge
    neighbors toward their midpoint by ``weight``; all other vertices
    (interior, and border junctions with three or more border edges) stay
    put. Connectivity never changes.
    """
    border = mesh.border_edges()
    if len(border) == 0 or steps <= 0:
        return mesh.copy()

    counts = np.bincount(border.ravel(), minlength=mesh.n_vertices)
    movable = counts == 2
    if not movable.any():
        return mesh.copy()

    # neighbor table for the movable vertices (exactly two entries each)
    nbr = np.full((mesh.n_vertices, 2), -1, dtype=np.int64)
    slot = np.zeros(mesh.n_vertices, dtype=np.int64)
    for a, b in border:
        for v, w in ((a, b), (b, a)):
            if movable[v]:
                nbr[v, slot[v]] = w
                slot[v] += 1

    verts = mesh.vertices.copy()
    idx = np.flatnonzero(movable)
    for _ in range(steps):
        mid = 0.5 * (verts[nbr[idx, 0]] + verts[nbr[idx, 1]])
        verts[idx] += weight * (mid - verts[idx])
    return TriMesh(verts, mesh.faces.copy())
