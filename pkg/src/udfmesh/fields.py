"""Unsigned distance fields: the query interface and concrete families.

Every field answers three batched queries at arbitrary 3D points:

* ``eval``              -- non-negative distance to the surface
* ``grad_x``            -- spatial gradient of that distance
* ``param_sensitivity`` -- derivative of the distance w.r.t. each of the
                           field's ``param_dim`` shape parameters

Fields are immutable after construction and safe to query from multiple
threads. Points where the distance is exactly zero have an undefined
gradient; those return a zero vector, detectable with
``degenerate_gradient_mask``.
"""

from __future__ import annotations

import numpy as np

from .distance import MeshDistanceIndex
from .mesh import TriMesh

GRAD_DEGENERATE_NORM = 1e-12


def _as_points(x) -> tuple[np.ndarray, bool]:
    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim == 1
    return pts.reshape(-1, 3), single


class UdfField:
    """Base class; subclasses implement the batched ``_eval``/``_grad``/``_sens``."""

    param_dim: int = 0

    def eval(self, x) -> np.ndarray:
        pts, single = _as_points(x)
        u = self._eval(pts)
        return u[0] if single else u

    def grad_x(self, x) -> np.ndarray:
        pts, single = _as_points(x)
        g = self._grad(pts)
        return g[0] if single else g

    def param_sensitivity(self, x) -> np.ndarray:
        pts, single = _as_points(x)
        if self.param_dim == 0:
            s = np.zeros((len(pts), 0))
        else:
            s = self._sens(pts)
        return s[0] if single else s

    def eval_grad(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Value and spatial gradient together; subclasses override when one
        pass can produce both."""
        pts, single = _as_points(x)
        u = self._eval(pts)
        g = self._grad(pts)
        return (u[0], g[0]) if single else (u, g)

    def degenerate_gradient_mask(self, x) -> np.ndarray:
        pts, single = _as_points(x)
        u, g = self.eval_grad(np.atleast_2d(pts))
        mask = (u == 0.0) | (np.linalg.norm(g, axis=-1) < GRAD_DEGENERATE_NORM)
        return mask[0] if single else mask

    def _eval(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _grad(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _sens(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class FiniteDifferenceGradient:
    """Mixin supplying a central-difference spatial gradient for black-box
    fields; step is 1e-4 of the registered domain scale."""

    domain_scale: float = 2.0 * np.sqrt(3.0)  # diagonal of [-1, 1]^3

    def _grad(self, pts: np.ndarray) -> np.ndarray:
        h = 1e-4 * self.domain_scale
        g = np.empty_like(pts)
        for axis in range(3):
            lo = pts.copy()
            hi = pts.copy()
            lo[:, axis] -= h
            hi[:, axis] += h
            g[:, axis] = (self._eval(hi) - self._eval(lo)) / (2 * h)
        return g


class MeshUdf(UdfField):
    """Exact Euclidean distance to a reference triangle mesh."""

    param_dim = 0

    def __init__(self, mesh: TriMesh, d_max: float | None = None):
        self.mesh = mesh
        self.d_max = d_max
        self.index = MeshDistanceIndex(mesh.vertices, mesh.faces)

    def closest_point(self, x) -> np.ndarray:
        pts, single = _as_points(x)
        _, cp = self.index.query(pts)
        return cp[0] if single else cp

    def _eval(self, pts: np.ndarray) -> np.ndarray:
        d, _ = self.index.query(pts)
        if self.d_max is not None:
            d = np.minimum(d, self.d_max)
        return d

    def _grad(self, pts: np.ndarray) -> np.ndarray:
        return self._eval_grad_fused(pts)[1]

    def _eval_grad_fused(self, pts: np.ndarray):
        d, cp = self.index.query(pts)
        g = np.zeros_like(pts)
        # distances at rounding scale are on-surface hits; their direction
        # would be pure noise
        ok = d[:, None] > 1e-12 * max(1.0, self.index.max_spread)
        np.divide(pts - cp, d[:, None], out=g, where=ok)
        if self.d_max is not None:
            g[d >= self.d_max] = 0.0
            d = np.minimum(d, self.d_max)
        return d, g

    def eval_grad(self, x):
        pts, single = _as_points(x)
        u, g = self._eval_grad_fused(pts)
        return (u[0], g[0]) if single else (u, g)


class TranslatedPlaneUdf(UdfField):
    """Distance to the plane z = t; the single parameter is the offset t."""

    param_dim = 1

    def __init__(self, offset: float = 0.0):
        self.offset = float(offset)

    def _eval(self, pts):
        return np.abs(pts[:, 2] - self.offset)

    def _grad(self, pts):
        g = np.zeros_like(pts)
        g[:, 2] = np.sign(pts[:, 2] - self.offset)
        return g

    def _sens(self, pts):
        return -np.sign(pts[:, 2] - self.offset)[:, None]

    def with_params(self, params) -> "TranslatedPlaneUdf":
        return TranslatedPlaneUdf(params[0])

    @property
    def params(self) -> np.ndarray:
        return np.array([self.offset])


class SphereShellUdf(UdfField):
    """Distance to the origin-centered sphere of radius r; parameter is r."""

    param_dim = 1

    def __init__(self, radius: float = 0.5):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)

    def _radial(self, pts):
        return np.linalg.norm(pts, axis=1)

    def _eval(self, pts):
        return np.abs(self._radial(pts) - self.radius)

    def _grad(self, pts):
        r = self._radial(pts)
        sign = np.sign(r - self.radius)
        g = np.zeros_like(pts)
        np.divide(pts, r[:, None], out=g, where=r[:, None] > 0)
        return g * sign[:, None]

    def _sens(self, pts):
        return -np.sign(self._radial(pts) - self.radius)[:, None]

    def with_params(self, params) -> "SphereShellUdf":
        return SphereShellUdf(params[0])

    @property
    def params(self) -> np.ndarray:
        return np.array([self.radius])


class RectanglePatchUdf(UdfField):
    """Distance to an axis-aligned rectangle in the plane z = z0.

    The rectangle spans [x_min, x_max] x [y_min, y_max]; the movable +x
    border x_max is the single shape parameter, so widening the patch is a
    one-parameter family with a genuine open border.
    """

    param_dim = 1

    def __init__(self, x_max: float = 0.5, x_min: float = -0.5,
                 y_range=(-0.5, 0.5), z0: float = 0.0):
        if x_max <= x_min:
            raise ValueError("x_max must exceed x_min")
        self.x_max = float(x_max)
        self.x_min = float(x_min)
        self.y_range = (float(y_range[0]), float(y_range[1]))
        self.z0 = float(z0)

    def _closest(self, pts):
        q = pts.copy()
        q[:, 0] = np.clip(pts[:, 0], self.x_min, self.x_max)
        q[:, 1] = np.clip(pts[:, 1], self.y_range[0], self.y_range[1])
        q[:, 2] = self.z0
        return q

    def _eval(self, pts):
        return np.linalg.norm(pts - self._closest(pts), axis=1)

    def _grad(self, pts):
        q = self._closest(pts)
        d = np.linalg.norm(pts - q, axis=1)
        g = np.zeros_like(pts)
        np.divide(pts - q, d[:, None], out=g, where=d[:, None] > 0)
        return g

    def _sens(self, pts):
        q = self._closest(pts)
        diff = pts - q
        d = np.linalg.norm(diff, axis=1)
        s = np.zeros((len(pts), 1))
        # only points clamped to the moving border respond to it
        clamped = pts[:, 0] > self.x_max
        ok = clamped & (d > 0)
        s[ok, 0] = -diff[ok, 0] / d[ok]
        return s

    def with_params(self, params) -> "RectanglePatchUdf":
        return RectanglePatchUdf(params[0], self.x_min, self.y_range, self.z0)

    @property
    def params(self) -> np.ndarray:
        return np.array([self.x_max])


class OpenCylinderUdf(UdfField):
    """Distance to a capless cylinder shell around the z axis; parameter is
    the radius."""

    param_dim = 1

    def __init__(self, radius: float = 0.6, z_range=(-0.6, 0.6)):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.z_range = (float(z_range[0]), float(z_range[1]))

    def _parts(self, pts):
        rho = np.hypot(pts[:, 0], pts[:, 1])
        dz = np.maximum.reduce([self.z_range[0] - pts[:, 2],
                                pts[:, 2] - self.z_range[1],
                                np.zeros(len(pts))])
        dr = rho - self.radius
        return rho, dr, dz

    def _eval(self, pts):
        _, dr, dz = self._parts(pts)
        inside_band = dz == 0
        return np.where(inside_band, np.abs(dr), np.hypot(dr, dz))

    def _grad(self, pts):
        rho, dr, dz = self._parts(pts)
        d = self._eval(pts)
        radial = np.zeros_like(pts)
        np.divide(pts[:, :2], rho[:, None], out=radial[:, :2], where=rho[:, None] > 0)
        g = np.zeros_like(pts)
        ok = d > 0
        zsign = np.sign(pts[:, 2] - np.clip(pts[:, 2], *self.z_range))
        g[ok] = radial[ok] * (dr[ok] / d[ok])[:, None]
        g[ok, 2] = zsign[ok] * dz[ok] / d[ok]
        return g

    def _sens(self, pts):
        _, dr, dz = self._parts(pts)
        d = self._eval(pts)
        s = np.zeros((len(pts), 1))
        ok = d > 0
        s[ok, 0] = -dr[ok] / d[ok]
        return s

    def with_params(self, params) -> "OpenCylinderUdf":
        return OpenCylinderUdf(params[0], self.z_range)

    @property
    def params(self) -> np.ndarray:
        return np.array([self.radius])


class TranslatedMeshUdf(UdfField):
    """A mesh UDF rigidly translated by an offset vector t (3 parameters)."""

    param_dim = 3

    def __init__(self, base: MeshUdf, offset=(0.0, 0.0, 0.0)):
        self.base = base
        self.offset = np.array(offset, dtype=np.float64).reshape(3)

    def _eval(self, pts):
        return self.base._eval(pts - self.offset)

    def _grad(self, pts):
        return self.base._grad(pts - self.offset)

    def _sens(self, pts):
        return -self.base._grad(pts - self.offset)

    def with_params(self, params) -> "TranslatedMeshUdf":
        return TranslatedMeshUdf(self.base, params)

    @property
    def params(self) -> np.ndarray:
        return self.offset.copy()


PARAMETRIC_FAMILIES = {
    "plane": TranslatedPlaneUdf,
    "sphere": SphereShellUdf,
    "patch": RectanglePatchUdf,
    "cylinder": OpenCylinderUdf,
}


def parametric_field(family: str, params) -> UdfField:
    """Build a parametric field from a family name and parameter list."""
    try:
        cls = PARAMETRIC_FAMILIES[family]
    except KeyError:
        known = ", ".join(sorted(PARAMETRIC_FAMILIES))
        raise ValueError(f"unknown field family {family!r} (expected one of: {known})")
    params = [float(p) for p in np.atleast_1d(params)]
    if family == "plane":
        return cls(params[0] if params else 0.0)
    if family == "sphere":
        return cls(params[0] if params else 0.5)
    if family == "patch":
        return cls(*params) if params else cls()
    if family == "cylinder":
        if len(params) >= 3:
            return cls(params[0], (params[1], params[2]))
        return cls(params[0]) if params else cls()
    raise AssertionError
