"""Core geometric types and transforms.

Coordinate conventions
----------------------
World frame: right-handed, meters. The ground is an arbitrary plane given by
a point and a unit up-normal; "up" is the direction of positive height and
gravity acts along -up_normal. Nothing assumes the ground is z = 0.

Camera frame: standard computer vision convention (x right, y down, z forward
along the optical axis). Pixels: u right, v down, origin at the top-left.

Two camera models are supported:

* ``full_perspective``: x_cam = R @ X + t, then the pinhole divide,
  u = fx * x/z + ox, v = fy * y/z + oy. Points must have z > 0.
* ``weak_perspective``: the HMR-style crop convention. A scalar scale ``s``
  and an in-plane translation ``t2d`` act on the world x/y directly and are
  then mapped to pixels with the fixed focal length:
  u = fx * s * (X_x + t2d_x) + ox, v = fy * s * (X_y + t2d_y) + oy.
  Camera rotation is ignored (assumed identity) and depth plays no role.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateMesh,
    NonOrthonormalRotation,
    NonPositiveDepth,
    ValidationError,
)

_UNIT_TOL = 1e-9
_ORTHO_TOL = 1e-8


def _as_points(a, name):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 3:
        raise ValidationError(f"{name} must have shape (n, 3), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} contains non-finite values")
    return a


@dataclass(frozen=True)
class Mesh:
    """Triangle mesh: float64 vertices (n_v, 3), int faces (n_f, 3).

    ``face_parts`` is an optional per-face part label in [0, n_parts).
    Validation rejects out-of-range indices and zero-area faces; meshes are
    immutable after construction.
    """

    vertices: np.ndarray
    faces: np.ndarray
    face_parts: np.ndarray | None = None

    def __post_init__(self):
        verts = _as_points(self.vertices, "vertices")
        faces = np.asarray(self.faces, dtype=np.int64)
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise ValidationError(f"faces must have shape (n, 3), got {faces.shape}")
        if len(faces) and (faces.min() < 0 or faces.max() >= len(verts)):
            raise ValidationError("face index out of range")
        areas = face_areas(verts, faces)
        if np.any(areas <= 0.0):
            bad = int(np.argmin(areas))
            raise DegenerateMesh(f"face {bad} has zero area")
        parts = self.face_parts
        if parts is not None:
            parts = np.asarray(parts, dtype=np.int64)
            if parts.shape != (len(faces),):
                raise ValidationError(
                    f"face_parts length {parts.shape} != face count {len(faces)}"
                )
            if len(parts) and parts.min() < 0:
                raise ValidationError("negative part label")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "faces", faces)
        object.__setattr__(self, "face_parts", parts)
        for a in (self.vertices, self.faces) + (
            (self.face_parts,) if self.face_parts is not None else ()
        ):
            a.setflags(write=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def with_vertices(self, vertices):
        """Same connectivity and labels, new vertex positions."""
        return Mesh(np.array(vertices, dtype=np.float64), self.faces.copy(),
                    None if self.face_parts is None else self.face_parts.copy())

    def triangle_corners(self):
        """Per-face corner positions, shape (n_f, 3, 3)."""
        return self.vertices[self.faces]


def face_areas(vertices, faces):
    v = np.asarray(vertices)[np.asarray(faces)]
    return 0.5 * np.linalg.norm(
        np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1
    )


@dataclass(frozen=True)
class GroundFrame:
    """Ground plane: a point on the plane and the unit up-normal."""

    point_on_plane: np.ndarray
    up_normal: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.point_on_plane, dtype=np.float64).reshape(3)
        n = np.asarray(self.up_normal, dtype=np.float64).reshape(3)
        if abs(np.linalg.norm(n) - 1.0) > _UNIT_TOL:
            raise ValidationError(
                f"up_normal must be unit length within {_UNIT_TOL}, got |n|={np.linalg.norm(n)}"
            )
        object.__setattr__(self, "point_on_plane", p)
        object.__setattr__(self, "up_normal", n)
        p.setflags(write=False)
        n.setflags(write=False)

    def tangent_basis(self):
        """Deterministic orthonormal in-plane basis (t1, t2).

        Smallest-axis rule: take the coordinate axis e_k with the smallest
        |up_normal[k]| (lowest index on ties), then t1 = normalize(e_k x n)
        and t2 = n x t1. Fixing the rule makes 2D hull output reproducible.
        """
        n = self.up_normal
        k = int(np.argmin(np.abs(n)))
        e = np.zeros(3)
        e[k] = 1.0
        t1 = np.cross(e, n)
        t1 /= np.linalg.norm(t1)
        t2 = np.cross(n, t1)
        return t1, t2

    def to_plane_coords(self, points):
        """Project points to the plane and express them in (t1, t2) coords."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        t1, t2 = self.tangent_basis()
        d = pts - self.point_on_plane
        return np.stack([d @ t1, d @ t2], axis=-1)

    def from_plane_coords(self, coords2d):
        """Inverse of :meth:`to_plane_coords` (returns points on the plane)."""
        c = np.atleast_2d(np.asarray(coords2d, dtype=np.float64))
        t1, t2 = self.tangent_basis()
        return self.point_on_plane + np.outer(c[:, 0], t1) + np.outer(c[:, 1], t2)


def height(frame, u):
    """Signed height of point(s) above the ground plane.

    h(u) = up_normal . (u - point_on_plane); negative below ground.
    """
    u = np.asarray(u, dtype=np.float64)
    return (u - frame.point_on_plane) @ frame.up_normal


def gravity_project(frame, u):
    """Project point(s) onto the ground plane along the up-normal."""
    u = np.asarray(u, dtype=np.float64)
    h = height(frame, u)
    return u - np.multiply.outer(h, frame.up_normal)


def _check_rotation(R, tol=_ORTHO_TOL):
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        raise NonOrthonormalRotation(f"rotation must be 3x3, got {R.shape}")
    err = np.abs(R.T @ R - np.eye(3)).max()
    if err > tol:
        raise NonOrthonormalRotation(f"R^T R deviates from I by {err:.3e} (tol {tol})")
    return R


@dataclass(frozen=True)
class Camera:
    """Pinhole or weak-perspective camera.

    ``variant`` selects the projection model. Intrinsics (fx, fy, ox, oy) are
    in pixels and used by both variants; R (3x3) and t (3,) apply to the
    full-perspective model only; ``s`` and ``t2d`` to the weak-perspective one.
    """

    variant: str
    fx: float
    fy: float
    ox: float
    oy: float
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    t: np.ndarray = field(default_factory=lambda: np.zeros(3))
    s: float = 1.0
    t2d: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        if self.variant not in ("full_perspective", "weak_perspective"):
            raise ValidationError(f"unknown camera variant {self.variant!r}")
        if not (self.fx > 0 and self.fy > 0):
            raise ValidationError("focal lengths must be positive")
        R = _check_rotation(self.R)
        t = np.asarray(self.t, dtype=np.float64).reshape(3)
        t2d = np.asarray(self.t2d, dtype=np.float64).reshape(2)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "t2d", t2d)
        for a in (R, t, t2d):
            a.setflags(write=False)


def project_point(cam, X):
    """Project 3D point(s) to pixel coordinates; see module docstring.

    Raises NonPositiveDepth if a full-perspective point has camera-frame
    depth <= 0.
    """
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    pts = np.atleast_2d(X)
    if cam.variant == "full_perspective":
        xc = pts @ cam.R.T + cam.t
        z = xc[:, 2]
        if np.any(z <= 0.0):
            raise NonPositiveDepth(
                f"point depth {z.min():.6g} <= 0 under full-perspective camera"
            )
        u = cam.fx * xc[:, 0] / z + cam.ox
        v = cam.fy * xc[:, 1] / z + cam.oy
    else:
        u = cam.fx * cam.s * (pts[:, 0] + cam.t2d[0]) + cam.ox
        v = cam.fy * cam.s * (pts[:, 1] + cam.t2d[1]) + cam.oy
    out = np.stack([u, v], axis=-1)
    return out[0] if single else out


def project_jacobian(cam, X):
    """Projection and its Jacobian d(pixel)/dX, shapes (n, 2) and (n, 2, 3)."""
    pts = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n = len(pts)
    if cam.variant == "full_perspective":
        xc = pts @ cam.R.T + cam.t
        z = xc[:, 2]
        if np.any(z <= 0.0):
            raise NonPositiveDepth(
                f"point depth {z.min():.6g} <= 0 under full-perspective camera"
            )
        u = cam.fx * xc[:, 0] / z + cam.ox
        v = cam.fy * xc[:, 1] / z + cam.oy
        J = np.zeros((n, 2, 3))
        J[:, 0, 0] = cam.fx / z
        J[:, 0, 2] = -cam.fx * xc[:, 0] / z**2
        J[:, 1, 1] = cam.fy / z
        J[:, 1, 2] = -cam.fy * xc[:, 1] / z**2
        J = J @ cam.R
        return np.stack([u, v], axis=-1), J
    u = cam.fx * cam.s * (pts[:, 0] + cam.t2d[0]) + cam.ox
    v = cam.fy * cam.s * (pts[:, 1] + cam.t2d[1]) + cam.oy
    J = np.zeros((n, 2, 3))
    J[:, 0, 0] = cam.fx * cam.s
    J[:, 1, 1] = cam.fy * cam.s
    return np.stack([u, v], axis=-1), J


def world_from_camera(mesh, R_c_w, t_c_w, t_c=(0.0, 0.0, 0.0)):
    """Map a camera-frame mesh into world coordinates.

    Per-vertex rigid composition: X_w = R_c_w^T (X_c - t_c) + (t_c_w - t_c),
    i.e. the body rotation picks up R_c_w^T and the body translation becomes
    -t_c + t_c_w. With t_c = 0 this is X_w = R_c_w^T X_c + t_c_w.
    """
    R = _check_rotation(np.asarray(R_c_w, dtype=np.float64))
    t_c_w = np.asarray(t_c_w, dtype=np.float64).reshape(3)
    t_c = np.asarray(t_c, dtype=np.float64).reshape(3)
    verts = (mesh.vertices - t_c) @ R + (t_c_w - t_c)
    return mesh.with_vertices(verts)


def camera_from_world(mesh, R_c_w, t_c_w, t_c=(0.0, 0.0, 0.0)):
    """Inverse of :func:`world_from_camera`."""
    R = _check_rotation(np.asarray(R_c_w, dtype=np.float64))
    t_c_w = np.asarray(t_c_w, dtype=np.float64).reshape(3)
    t_c = np.asarray(t_c, dtype=np.float64).reshape(3)
    verts = (mesh.vertices - (t_c_w - t_c)) @ R.T + t_c
    return mesh.with_vertices(verts)
