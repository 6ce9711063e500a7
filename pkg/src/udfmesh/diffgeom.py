"""Derivatives of extracted vertices w.r.t. field parameters, and fitting.

Extraction itself is not differentiable, but each vertex can be modeled as
riding the zero set of the field. Probing parameter sensitivities a small
distance alpha on either side of a vertex along its surface normal gives a
rank-1 derivative row: the vertex moves along the normal at the rate the
zero set does. Each one-sided probe fully determines that rate (the two
probes are two estimates of the same motion), so the row averages them:

    dv/dc = n * 0.5 * [dphi/dc(v - alpha*n) - dphi/dc(v + alpha*n)]

Border vertices get a tangential rule instead: along the outward in-plane
vector o, raising the field ahead of the border pulls it in, so

    dv/dc = -o * dphi/dc(v + alpha*o)

which lets an optimizer grow or shrink open surfaces.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from .extract import extract_mesh
from .fields import UdfField
from .grid import GridSpec
from .mesh import TriMesh
from .metrics import nearest_neighbor_sq, sample_surface
from .postprocess import remove_spurious_facets, smooth_borders

DEFAULT_ALPHA = 1e-2


def vertex_normals(mesh: TriMesh) -> np.ndarray:
    """Per-vertex unit normals, robust to inconsistent face orientation.

    Faces are accumulated area-weighted, each one flipped if needed to agree
    with the running sum, so opposite-wound neighbors reinforce instead of
    cancelling. Vertices without faces get a zero normal.
    """
    fn = mesh.face_normals(normalize=False)  # area-weighted (2x area)
    out = np.zeros((mesh.n_vertices, 3))
    order = np.argsort(mesh.faces.ravel(), kind="stable")
    flat_faces = mesh.faces.ravel()[order]
    flat_fidx = np.repeat(np.arange(mesh.n_faces), 3)[order]
    starts = np.searchsorted(flat_faces, np.arange(mesh.n_vertices))
    ends = np.searchsorted(flat_faces, np.arange(mesh.n_vertices), side="right")
    for v in range(mesh.n_vertices):
        acc = np.zeros(3)
        for fi in flat_fidx[starts[v]:ends[v]]:
            n = fn[fi]
            acc += -n if acc @ n < 0 else n
        norm = np.linalg.norm(acc)
        if norm < 1e-300 and ends[v] > starts[v]:
            acc = fn[flat_fidx[starts[v]]]
            norm = np.linalg.norm(acc)
        if norm > 0:
            out[v] = acc / norm
    return out


def vertex_normal(mesh: TriMesh, v: int) -> np.ndarray:
    return vertex_normals(mesh)[v]


def outward_vectors(mesh: TriMesh, field: UdfField,
                    alpha: float = DEFAULT_ALPHA):
    """Outward in-plane unit vectors at border vertices.

    o is the unit cross product of the incident face normal with the local
    border direction, its sign chosen toward increasing field value. At a
    vertex with exactly two border edges the border direction is the chord
    between its two neighbors, which cancels most of the staircase jag of
    extracted borders; junction vertices (3+ border edges) fall back to
    their first border edge. Returns (o (V, 3), resolved (V,) bool);
    unresolved vertices (degenerate cross product) should be treated as
    interior.
    """
    border = mesh.border_edges()
    o = np.zeros((mesh.n_vertices, 3))
    resolved = np.zeros(mesh.n_vertices, dtype=bool)
    if len(border) == 0:
        return o, resolved

    # border edge -> its unique face
    edge_face = {}
    for fi, tri in enumerate(mesh.faces):
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            edge_face.setdefault(key, fi)

    counts = np.bincount(border.ravel(), minlength=mesh.n_vertices)
    junctions = int((counts > 2).sum())
    if junctions:
        warnings.warn(f"{junctions} border vertices join 3+ border edges; "
                      "using their first border edge for the outward vector")

    neighbors: dict[int, list[int]] = {}
    first_edge = {}
    for a, b in border:
        a, b = int(a), int(b)
        neighbors.setdefault(a, []).append(b)
        neighbors.setdefault(b, []).append(a)
        first_edge.setdefault(a, (a, b))
        first_edge.setdefault(b, (b, a))

    fn = mesh.face_normals()
    verts = list(first_edge)
    dirs = np.zeros((len(verts), 3))
    keep = np.zeros(len(verts), dtype=bool)
    for row, v in enumerate(verts):
        a, b = first_edge[v]
        n = fn[edge_face[(min(a, b), max(a, b))]]
        nbrs = neighbors[v]
        if len(nbrs) == 2:
            e = mesh.vertices[nbrs[1]] - mesh.vertices[nbrs[0]]
        else:
            e = mesh.vertices[b] - mesh.vertices[a]
        cross = np.cross(n, e)
        norm = np.linalg.norm(cross)
        if norm < 1e-9:
            continue
        dirs[row] = cross / norm
        keep[row] = True

    vidx = np.array(verts, dtype=np.int64)
    pos = mesh.vertices[vidx[keep]]
    d = dirs[keep]
    u_plus = field.eval(pos + alpha * d)
    u_minus = field.eval(pos - alpha * d)
    sign = np.where(u_plus >= u_minus, 1.0, -1.0)
    o[vidx[keep]] = d * sign[:, None]
    resolved[vidx[keep]] = True
    return o, resolved


@dataclass
class VertexJacobian:
    """Rank-1 derivative rows: dv/dc = direction outer row, per vertex."""

    directions: np.ndarray          # (V, 3) unit n (interior) or o (border)
    rows: np.ndarray                # (V, C)
    is_border: np.ndarray           # (V,) bool
    alpha: float

    @property
    def n_vertices(self) -> int:
        return len(self.directions)

    @property
    def param_dim(self) -> int:
        return self.rows.shape[1]

    def predict_displacement(self, dc) -> np.ndarray:
        """First-order vertex motion for a parameter change dc, shape (V, 3)."""
        dc = np.asarray(dc, dtype=np.float64).reshape(-1)
        return (self.rows @ dc)[:, None] * self.directions

    def param_gradient(self, vertex_grads: np.ndarray) -> np.ndarray:
        """Pull per-vertex loss gradients (V, 3) back to the parameters."""
        along = np.einsum("vj,vj->v", vertex_grads, self.directions)
        return self.rows.T @ along


def interior_vertex_rows(field: UdfField, points: np.ndarray,
                         normals: np.ndarray, alpha: float) -> np.ndarray:
    """Rows for vertices inside the surface; invariant under n -> -n."""
    minus = field.param_sensitivity(points - alpha * normals)
    plus = field.param_sensitivity(points + alpha * normals)
    return 0.5 * (minus - plus)


def border_vertex_rows(field: UdfField, points: np.ndarray,
                       outward: np.ndarray, alpha: float) -> np.ndarray:
    """Rows for border vertices: raising the field ahead shrinks the sheet."""
    return -field.param_sensitivity(points + alpha * outward)


def interior_vertex_derivative(field: UdfField, v, n,
                               alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Full 3 x C derivative of one interior vertex."""
    row = interior_vertex_rows(field, np.asarray(v, float).reshape(1, 3),
                               np.asarray(n, float).reshape(1, 3), alpha)[0]
    return np.outer(np.asarray(n, float), row)


def border_vertex_derivative(field: UdfField, v, o,
                             alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Full 3 x C derivative of one border vertex."""
    row = border_vertex_rows(field, np.asarray(v, float).reshape(1, 3),
                             np.asarray(o, float).reshape(1, 3), alpha)[0]
    return np.outer(np.asarray(o, float), row)


def assemble_jacobian(mesh: TriMesh, field: UdfField,
                      alpha: float = DEFAULT_ALPHA,
                      use_border_formula: bool = True) -> VertexJacobian:
    """One derivative row per vertex; border vertices use the outward rule
    unless ``use_border_formula`` is off (the ablation switch)."""
    normals = vertex_normals(mesh)
    is_border = mesh.border_vertex_mask()
    directions = normals.copy()
    rows = np.zeros((mesh.n_vertices, field.param_dim))

    if use_border_formula and is_border.any():
        o, resolved = outward_vectors(mesh, field, alpha)
        border = is_border & resolved
        directions[border] = o[border]
    else:
        border = np.zeros(mesh.n_vertices, dtype=bool)

    interior = ~border
    if field.param_dim:
        if interior.any():
            rows[interior] = interior_vertex_rows(
                field, mesh.vertices[interior], directions[interior], alpha)
        if border.any():
            rows[border] = border_vertex_rows(
                field, mesh.vertices[border], directions[border], alpha)
    return VertexJacobian(directions, rows, border, alpha)


# -- point-cloud fitting -------------------------------------------------------

@dataclass
class FitResult:
    params: np.ndarray
    field: UdfField
    trace: list = dc_field(default_factory=list)   # (iter, chamfer, reg, total)
    events: list = dc_field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.trace[-1][3] if self.trace else float("nan")

    def trace_csv(self) -> str:
        lines = ["iter,chamfer,reg,total"]
        for it, chd, reg, total in self.trace:
            lines.append(f"{it},{chd:.10g},{reg:.10g},{total:.10g}")
        return "\n".join(lines) + "\n"


def fit_point_cloud(field: UdfField, target: np.ndarray, spec: GridSpec,
                    iters: int = 100, lr: float = 0.02,
                    lambda_reg: float = 0.0, alpha: float = DEFAULT_ALPHA,
                    n_surface: int = 10000, use_border_formula: bool = True,
                    adaptive: bool = False, prune_tol: float | None = None,
                    smooth_steps: int = 5, seed: int = 0) -> FitResult:
    """Descend the one-sided Chamfer loss from a sparse point cloud to the
    extracted surface, moving the field parameters.

    Each iteration re-extracts the mesh, samples its surface (same seed
    every pass to keep gradient variance down), matches every target point
    to its nearest sample, and pushes the point-to-sample distances back
    through the barycentric weights and the vertex derivative rows.
    """
    target = np.asarray(target, dtype=np.float64).reshape(-1, 3)
    if len(target) == 0:
        raise ValueError("target point cloud is empty")
    params = np.asarray(field.params, dtype=np.float64).copy()
    if prune_tol is None:
        prune_tol = 0.5 * spec.cell_diagonal

    result = FitResult(params=params, field=field)
    m1 = np.zeros_like(params)
    m2 = np.zeros_like(params)

    for it in range(iters):
        current = field.with_params(params)
        mesh = extract_mesh(current, spec)
        if not mesh.is_empty():
            mesh = remove_spurious_facets(mesh, current, prune_tol)
        if not mesh.is_empty() and smooth_steps > 0:
            mesh = smooth_borders(mesh, steps=smooth_steps)
        if mesh.is_empty():
            result.events.append((it, "empty mesh, step skipped"))
            result.trace.append((it, float("nan"), float("nan"), float("nan")))
            continue

        pts, _, faces, bary = sample_surface(mesh, n_surface, seed)
        d2, idx = nearest_neighbor_sq(target, pts)
        dist = np.sqrt(d2)
        chd_loss = float(dist.mean())

        # d|a - p|/da for each matched sample, averaged over targets
        ok = dist > 0
        pull = np.zeros_like(target)
        pull[ok] = (pts[idx[ok]] - target[ok]) / dist[ok, None]
        pull /= len(target)

        vgrad = np.zeros((mesh.n_vertices, 3))
        hit_faces = mesh.faces[faces[idx]]
        hit_bary = bary[idx]
        for corner in range(3):
            np.add.at(vgrad, hit_faces[:, corner],
                      hit_bary[:, corner, None] * pull)

        jac = assemble_jacobian(mesh, current, alpha, use_border_formula)
        grad = jac.param_gradient(vgrad)

        reg_loss = 0.0
        norm = np.linalg.norm(params)
        if lambda_reg > 0:
            reg_loss = float(lambda_reg * norm)
            if norm > 0:
                grad = grad + lambda_reg * params / norm
        result.trace.append((it, chd_loss, reg_loss, chd_loss + reg_loss))

        if adaptive:
            m1 = 0.9 * m1 + 0.1 * grad
            m2 = 0.999 * m2 + 0.001 * grad * grad
            c1 = m1 / (1 - 0.9 ** (it + 1))
            c2 = m2 / (1 - 0.999 ** (it + 1))
            params = params - lr * c1 / (np.sqrt(c2) + 1e-8)
        else:
            params = params - lr * grad

    result.params = params
    result.field = field.with_params(params)
    return result


# -- finite-difference verification --------------------------------------------

@dataclass
class GradcheckReport:
    passed: bool
    max_error: float
    worst: tuple | None              # (vertex index, predicted, measured)
    n_checked: int
    n_rejected: int
    records: list = dc_field(default_factory=list)

    def csv(self) -> str:
        lines = ["vertex,predicted,measured,error,tolerance,kind"]
        for rec in self.records:
            lines.append("%d,%.10g,%.10g,%.10g,%.10g,%s" % rec)
        return "\n".join(lines) + "\n"


def directional_gradcheck(field: UdfField, spec: GridSpec, delta: np.ndarray,
                          eps: float = 1e-3, alpha: float = DEFAULT_ALPHA,
                          rtol: float = 0.10, atol: float = 1e-4,
                          prune_tol: float | None = None,
                          seed: int = 0) -> GradcheckReport:
    """Compare predicted vertex motion against re-extraction.

    The field is perturbed by eps*delta, the mesh re-extracted, and each
    interior vertex matched to its nearest new vertex (rejection radius half
    a step). Measured displacement projected on the vertex direction must
    agree with the predicted rate within max(rtol * |predicted|, atol).
    Border vertices are excluded: their positions are grid-quantized along
    the border tangent, so re-extraction cannot observe the modeled
    tangential rate (the fitting tests exercise that term end to end).
    """
    delta = np.asarray(delta, dtype=np.float64).reshape(-1)
    if field.param_dim == 0:
        return GradcheckReport(True, 0.0, None, 0, 0)
    if prune_tol is None:
        prune_tol = 0.5 * spec.cell_diagonal

    base_params = np.asarray(field.params, dtype=np.float64)
    mesh0 = remove_spurious_facets(extract_mesh(field, spec), field, prune_tol)
    if mesh0.is_empty():
        raise ValueError("gradcheck: base field extracts an empty mesh")
    jac = assemble_jacobian(mesh0, field)

    moved = field.with_params(base_params + eps * delta)
    mesh1 = remove_spurious_facets(extract_mesh(moved, spec), moved, prune_tol)
    if mesh1.is_empty():
        raise ValueError("gradcheck: perturbed field extracts an empty mesh")

    # exclude borders and anything within a cell of the domain walls
    lo = np.asarray(spec.bounds_min) + spec.step
    hi = np.asarray(spec.bounds_max) - spec.step
    inside_domain = np.all((mesh0.vertices >= lo) & (mesh0.vertices <= hi), axis=1)
    check = inside_domain & ~jac.is_border

    d2, idx = nearest_neighbor_sq(mesh0.vertices, mesh1.vertices)
    radius = 0.5 * float(spec.step.min())
    matched = d2 <= radius * radius
    n_rejected = int((check & ~matched).sum())
    check &= matched

    predicted_rate = jac.rows @ delta
    disp = mesh1.vertices[idx] - mesh0.vertices
    measured = np.einsum("vj,vj->v", disp, jac.directions) / eps

    records = []
    max_err = 0.0
    worst = None
    passed = True
    for v in np.flatnonzero(check):
        err = abs(measured[v] - predicted_rate[v])
        tol = max(rtol * abs(predicted_rate[v]), atol / eps)
        ok = err <= tol
        records.append((v, predicted_rate[v], measured[v], err, tol,
                        "interior"))
        if err > max_err:
            max_err = err
            worst = (int(v), float(predicted_rate[v]), float(measured[v]))
        passed &= ok
    return GradcheckReport(passed, max_err, worst, int(check.sum()),
                           n_rejected, records)
