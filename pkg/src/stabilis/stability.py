"""Stability elements: center of mass, pressure field / center of pressure,
and base of support.

The part-weighted center of mass is the part-volume-weighted mean of surface
samples. Pressure is a per-sample proxy derived from signed height: a linear
(Hooke-style) ramp 1 - alpha*h below ground and an exponential decay
exp(-gamma*h) above it, continuous at h = 0 where both branches equal one.
The center of pressure is the pressure-weighted sample mean. The base of
support is the 2D convex hull (monotone chain, collinear points dropped) of
gravity-projected samples within a height band |h| < tau, expressed in the
ground frame's deterministic tangent basis.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMesh, EmptyInput, ValidationError
from .geometry import GroundFrame, face_areas, gravity_project, height

DEFAULT_TAU = 0.10
_BOUNDARY_SLACK = 1e-9


# ---------------------------------------------------------------------------
# centers of mass

def com_part(samples, part_volumes, part_labels):
    """Part-volume-weighted mean of surface samples.

    Each sample is weighted by the volume of the part it was drawn from;
    the result lies in the convex hull of the samples.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise EmptyInput("no samples")
    vols = np.asarray(part_volumes, dtype=np.float64)
    labels = np.asarray(part_labels, dtype=np.int64)
    if np.any(vols <= 0):
        raise ValidationError("part volumes must be positive")
    if labels.min() < 0 or labels.max() >= len(vols):
        raise ValidationError("part label out of range")
    w = vols[labels]
    return (w[:, None] * samples).sum(axis=0) / w.sum()


def com_naive(vertices):
    """Plain mean of the mesh vertices."""
    vertices = np.asarray(vertices, dtype=np.float64)
    if vertices.size == 0:
        raise EmptyInput("no vertices")
    return vertices.mean(axis=0)


def com_naive_uniform(samples):
    """Plain mean of area-uniform surface samples."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise EmptyInput("no samples")
    return samples.mean(axis=0)


def com_trig(mesh):
    """Area-weighted mean of triangle centroids."""
    areas = face_areas(mesh.vertices, mesh.faces)
    if areas.sum() <= 0:
        raise DegenerateMesh("mesh has no area")
    centroids = mesh.vertices[mesh.faces].mean(axis=1)
    return (areas[:, None] * centroids).sum(axis=0) / areas.sum()


# ---------------------------------------------------------------------------
# pressure field and center of pressure

@dataclass(frozen=True)
class PressureField:
    """Per-sample relative pressure values plus their (alpha, gamma)."""

    values: np.ndarray
    alpha: float
    gamma: float


def pressure_values(heights, alpha, gamma):
    h = np.asarray(heights, dtype=np.float64)
    return np.where(h < 0.0, 1.0 - alpha * h, np.exp(-gamma * h))


def pressure_derivative(heights, alpha, gamma):
    """d(pressure)/d(height), branchwise."""
    h = np.asarray(heights, dtype=np.float64)
    return np.where(h < 0.0, -alpha, -gamma * np.exp(-gamma * h))


def pressure(frame, samples, alpha, gamma):
    """Pressure field over samples from their signed heights."""
    if alpha < 0 or gamma < 0:
        raise ValidationError("alpha and gamma must be >= 0")
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise EmptyInput("no samples")
    return PressureField(values=pressure_values(height(frame, samples), alpha, gamma),
                         alpha=float(alpha), gamma=float(gamma))


def cop(field, samples):
    """Pressure-weighted mean of the samples."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise EmptyInput("no samples")
    rho = field.values
    return (rho[:, None] * samples).sum(axis=0) / rho.sum()


# ---------------------------------------------------------------------------
# base of support

@dataclass(frozen=True)
class BaseOfSupport:
    """Contacts and their convex hull in the ground tangent basis.

    ``tag`` is one of empty / point / segment / polygon; ``hull`` holds the
    counter-clockwise hull vertices (0, 1, 2 or >= 3 rows accordingly).
    """

    tau: float
    contacts: np.ndarray
    hull: np.ndarray
    tag: str
    frame: GroundFrame = field(repr=False, default=None)


def monotone_chain(points):
    """2D convex hull, counter-clockwise, collinear points dropped."""
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(pts) <= 2:
        return pts
    # lexicographic sort by (x, y); np.unique already provides it
    def build(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and np.cross(out[-1] - out[-2], p - out[-2]) <= 0.0:
                out.pop()
            out.append(p)
        return out

    lower = build(pts)
    upper = build(pts[::-1])
    hull = np.asarray(lower[:-1] + upper[:-1])
    if len(hull) <= 2:  # all collinear
        ends = [pts[0], pts[-1]]
        return np.asarray(ends)
    return hull


def base_of_support(frame, samples, tau=DEFAULT_TAU):
    """Gravity-projected contacts C = {g(v) : |h(v)| < tau} and their hull."""
    if tau <= 0:
        raise ValidationError("tau must be positive")
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    h = height(frame, samples)
    contacts3d = gravity_project(frame, samples[np.abs(h) < tau])
    contacts = (frame.to_plane_coords(contacts3d)
                if len(contacts3d) else np.zeros((0, 2)))
    hull = monotone_chain(contacts) if len(contacts) else np.zeros((0, 2))
    tag = {0: "empty", 1: "point", 2: "segment"}.get(len(hull), "polygon")
    return BaseOfSupport(tau=float(tau), contacts=contacts, hull=hull,
                         tag=tag, frame=frame)


def point_in_hull_2d(hull, p, slack=_BOUNDARY_SLACK):
    """Boundary-inclusive point test against a ccw hull polygon.

    Half-plane tests on signed distance with `slack` tolerance; degenerate
    hulls (point / segment) admit only points within `slack` of them.
    """
    p = np.asarray(p, dtype=np.float64)
    if len(hull) == 0:
        return False
    if len(hull) == 1:
        return bool(np.linalg.norm(p - hull[0]) <= slack)
    if len(hull) == 2:
        a, b = hull
        ab = b - a
        t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
        return bool(np.linalg.norm(a + t * ab - p) <= slack)
    a = hull
    b = np.roll(hull, -1, axis=0)
    edge = b - a
    lengths = np.linalg.norm(edge, axis=1)
    signed = np.cross(edge, p - a) / lengths
    return bool(np.all(signed >= -slack))


def is_stable(com, bos, frame):
    """True iff the gravity-projected CoM lies in the BoS hull.

    Boundary counts as inside (1e-9 slack on the half-plane tests); an empty
    or degenerate hull admits only points on the degenerate set itself.
    """
    p = frame.to_plane_coords(gravity_project(frame, np.asarray(com, dtype=np.float64)))[0]
    return point_in_hull_2d(bos.hull, p)


# ---------------------------------------------------------------------------
# pressure heatmap grid

@dataclass(frozen=True)
class PressureGrid:
    """Regular in-plane grid of summed pressure.

    origin is the lower-left cell corner in tangent coordinates; values[i, j]
    covers [origin + (i, j)*cell, origin + (i+1, j+1)*cell).
    """

    origin: np.ndarray
    cell: float
    values: np.ndarray

    def cell_centers(self):
        nx, ny = self.values.shape
        xs = self.origin[0] + (np.arange(nx) + 0.5) * self.cell
        ys = self.origin[1] + (np.arange(ny) + 0.5) * self.cell
        return xs, ys


def pressure_heatmap(frame, samples, field, cell=0.01):
    """Sum per-sample pressure into a ground-plane grid.

    Samples are gravity-projected, expressed in the tangent basis, and their
    pressure accumulated per cell. Values are relative (unnormalized). The
    grid origin snaps to integer multiples of the cell size so identical
    inputs give identical grids.
    """
    if cell <= 0:
        raise ValidationError("cell size must be positive")
    samples = np.asarray(samples, dtype=np.float64)
    coords = frame.to_plane_coords(gravity_project(frame, samples))
    lo = np.floor(coords.min(axis=0) / cell) * cell
    idx = np.floor((coords - lo) / cell).astype(np.int64)
    shape = idx.max(axis=0) + 1
    values = np.zeros(tuple(shape))
    np.add.at(values, (idx[:, 0], idx[:, 1]), field.values)
    return PressureGrid(origin=lo, cell=float(cell), values=values)


def write_heatmap_csv(path, grid):
    """CSV rows (x, y, pressure) over cell centers, row-major, 17 sig digits."""
    xs, ys = grid.cell_centers()
    with open(path, "w", newline="\n") as f:
        f.write("x,y,pressure\n")
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                f.write(f"{x:.17g},{y:.17g},{grid.values[i, j]:.17g}\n")


def write_heatmap_pgm(path, grid, maxval=65535):
    """ASCII PGM image of the grid, scaled so the peak cell maps to maxval.

    Rows run along +y (top row = largest y) so the image reads like a plot.
    """
    v = grid.values
    peak = v.max()
    scaled = np.zeros_like(v, dtype=np.int64) if peak <= 0 else np.rint(
        v / peak * maxval).astype(np.int64)
    nx, ny = v.shape
    lines = [f"P2\n{nx} {ny}\n{maxval}\n"]
    for j in range(ny - 1, -1, -1):
        lines.append(" ".join(str(int(scaled[i, j])) for i in range(nx)) + "\n")
    with open(path, "w", newline="\n") as f:
        f.writelines(lines)
