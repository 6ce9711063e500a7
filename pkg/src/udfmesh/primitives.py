"""Constructors for simple reference meshes used in experiments and tests."""

from __future__ import annotations

import numpy as np

from .mesh import TriMesh


def square_patch(side: float = 1.0, z: float = 0.0, center=(0.0, 0.0),
                 subdivisions: int = 1) -> TriMesh:
    """Flat square sheet in the z-plane, optionally subdivided into a grid."""
    n = subdivisions + 1
    half = side / 2.0
    xs = np.linspace(center[0] - half, center[0] + half, n)
    ys = np.linspace(center[1] - half, center[1] + half, n)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([gx.ravel(), gy.ravel(), np.full(n * n, float(z))])
    faces = []
    for i in range(subdivisions):
        for j in range(subdivisions):
            v00 = i * n + j
            v10 = (i + 1) * n + j
            v01 = i * n + j + 1
            v11 = (i + 1) * n + j + 1
            faces.append((v00, v10, v11))
            faces.append((v00, v11, v01))
    return TriMesh(verts, np.array(faces, dtype=np.int64))


def parallel_patches(side: float, z_low: float, z_high: float,
                     subdivisions: int = 1) -> TriMesh:
    """Two coaxial square sheets at different heights, as one mesh."""
    lo = square_patch(side, z_low, subdivisions=subdivisions)
    hi = square_patch(side, z_high, subdivisions=subdivisions)
    verts = np.vstack([lo.vertices, hi.vertices])
    faces = np.vstack([lo.faces, hi.faces + lo.n_vertices])
    return TriMesh(verts, faces)


def open_cylinder(radius: float = 0.6, z_min: float = -0.6, z_max: float = 0.6,
                  segments: int = 48, rings: int = 12) -> TriMesh:
    """Capless tube around the z axis; open at both ends."""
    thetas = np.linspace(0.0, 2 * np.pi, segments, endpoint=False)
    zs = np.linspace(z_min, z_max, rings + 1)
    verts = np.array([
        (radius * np.cos(t), radius * np.sin(t), z)
        for z in zs for t in thetas
    ])
    faces = []
    for r in range(rings):
        for s in range(segments):
            s1 = (s + 1) % segments
            a = r * segments + s
            b = r * segments + s1
            c = (r + 1) * segments + s
            d = (r + 1) * segments + s1
            faces.append((a, b, d))
            faces.append((a, d, c))
    return TriMesh(verts, np.array(faces, dtype=np.int64))


def disk(radius: float = 0.5, z: float = 0.0, segments: int = 48) -> TriMesh:
    """Fan-triangulated flat disk with a circular open border."""
    thetas = np.linspace(0.0, 2 * np.pi, segments, endpoint=False)
    verts = np.zeros((segments + 1, 3))
    verts[:, 2] = z
    verts[1:, 0] = radius * np.cos(thetas)
    verts[1:, 1] = radius * np.sin(thetas)
    faces = [(0, 1 + s, 1 + (s + 1) % segments) for s in range(segments)]
    return TriMesh(verts, np.array(faces, dtype=np.int64))


def uv_sphere(radius: float = 0.5, segments: int = 32, rings: int = 16) -> TriMesh:
    """Closed latitude/longitude sphere centered at the origin."""
    verts = [(0.0, 0.0, radius)]
    for r in range(1, rings):
        phi = np.pi * r / rings
        for s in range(segments):
            theta = 2 * np.pi * s / segments
            verts.append((radius * np.sin(phi) * np.cos(theta),
                          radius * np.sin(phi) * np.sin(theta),
                          radius * np.cos(phi)))
    verts.append((0.0, 0.0, -radius))
    south = len(verts) - 1
    faces = []
    for s in range(segments):
        s1 = (s + 1) % segments
        faces.append((0, 1 + s, 1 + s1))
    for r in range(rings - 2):
        row0 = 1 + r * segments
        row1 = row0 + segments
        for s in range(segments):
            s1 = (s + 1) % segments
            faces.append((row0 + s, row1 + s, row1 + s1))
            faces.append((row0 + s, row1 + s1, row0 + s1))
    row = 1 + (rings - 2) * segments
    for s in range(segments):
        s1 = (s + 1) % segments
        faces.append((row + s, south, row + s1))
    return TriMesh(np.array(verts), np.array(faces, dtype=np.int64))
