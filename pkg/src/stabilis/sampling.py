"""Area-uniform surface sampling and the sparse barycentric regressor.

Samples are drawn once on a template mesh and transported to any deformed
copy of it through a sparse row-stochastic matrix W (3 non-zeros per row, the
barycentric weights of the sample in its source face), so sample positions
are an exactly linear function of the vertices and d(samples)/d(vertices) is
W itself.

Randomness comes from numpy's Philox counter-based bit generator keyed by the
seed, consumed in a fixed order: one batch of n uniforms for face selection
(inverse CDF over cumulative face areas), then n for r1, then n for r2 of the
triangle point picking map
    u = (1 - sqrt(r1)) A + sqrt(r1) (1 - r2) B + sqrt(r1) r2 C,
which is reproducible bit-for-bit across platforms.

The regressor can be cached next to the template mesh as little-endian
triplets (row u32, col u32, weight f64) between an 8-byte magic header and a
32-byte SHA-256 footer hashing mesh content, n and seed; a stale or corrupt
cache is simply ignored and resampled. Rows are written in sample order, and
each row's three triplets in source-face vertex order, so the source face of
every sample can be recovered by matching its column triple against the face
list.
"""

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMesh, DimensionMismatch, ValidationError
from .geometry import face_areas

_MAGIC = b"STBLSW1\n"
_AREA_EPS = 1e-12


@dataclass(frozen=True)
class SurfaceRegressor:
    """Sparse sampling matrix in 3-per-row form.

    cols[i], weights[i] give the vertex indices and barycentric weights of
    sample i; face_index[i] its source face; part_labels[i] the face's part
    label (-1 when the template mesh carries no labels).
    """

    n_vertices: int
    cols: np.ndarray
    weights: np.ndarray
    face_index: np.ndarray
    part_labels: np.ndarray

    def __post_init__(self):
        cols = np.asarray(self.cols, dtype=np.int64)
        w = np.asarray(self.weights, dtype=np.float64)
        if cols.shape != w.shape or cols.ndim != 2 or cols.shape[1] != 3:
            raise ValidationError("cols/weights must both be (n_samples, 3)")
        if np.any(w < 0) or np.abs(w.sum(axis=1) - 1.0).max() > 1e-12:
            raise ValidationError("barycentric rows must be >= 0 and sum to 1")
        if len(cols) and (cols.min() < 0 or cols.max() >= self.n_vertices):
            raise ValidationError("column index out of range")
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "face_index", np.asarray(self.face_index, dtype=np.int64))
        object.__setattr__(self, "part_labels", np.asarray(self.part_labels, dtype=np.int64))
        for a in (self.cols, self.weights, self.face_index, self.part_labels):
            a.setflags(write=False)

    @property
    def n_samples(self):
        return len(self.cols)

    def transpose_apply(self, per_sample):
        """W^T @ per_sample: scatter per-sample rows back to vertices.

        The adjoint of :func:`apply_regressor`; used by every loss gradient.
        """
        per_sample = np.asarray(per_sample, dtype=np.float64)
        out_shape = (self.n_vertices,) + per_sample.shape[1:]
        out = np.zeros(out_shape)
        for k in range(3):
            np.add.at(out, self.cols[:, k],
                      per_sample * self.weights[:, k, None]
                      if per_sample.ndim > 1 else per_sample * self.weights[:, k])
        return out


def sample_surface(mesh, n, seed):
    """Draw n area-uniform surface samples; deterministic for a fixed seed."""
    if n < 1:
        raise ValidationError("need at least one sample")
    areas = face_areas(mesh.vertices, mesh.faces)
    total = areas.sum()
    if total < _AREA_EPS:
        raise DegenerateMesh(f"total surface area {total:.3e} below {_AREA_EPS}")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    u_face = rng.random(n)
    r1 = rng.random(n)
    r2 = rng.random(n)
    cum = np.cumsum(areas) / total
    cum[-1] = 1.0  # guard against rounding in the final bin
    face_idx = np.searchsorted(cum, u_face, side="right")
    s = np.sqrt(r1)
    w = np.stack([1.0 - s, s * (1.0 - r2), s * r2], axis=1)
    cols = mesh.faces[face_idx]
    parts = (mesh.face_parts[face_idx] if mesh.face_parts is not None
             else np.full(n, -1, dtype=np.int64))
    return SurfaceRegressor(n_vertices=mesh.n_vertices, cols=cols, weights=w,
                            face_index=face_idx, part_labels=parts)


def regressor_from_face_centroids(mesh):
    """One sample per face at its centroid (weights 1/3 each).

    Deterministic alternative to random sampling; used for fixtures that must
    keep an exact mirror symmetry in the sample set.
    """
    n = mesh.n_faces
    w = np.full((n, 3), 1.0 / 3.0)
    parts = (mesh.face_parts.copy() if mesh.face_parts is not None
             else np.full(n, -1, dtype=np.int64))
    return SurfaceRegressor(n_vertices=mesh.n_vertices, cols=mesh.faces.copy(),
                            weights=w, face_index=np.arange(n), part_labels=parts)


def apply_regressor(reg, vertices):
    """Sample positions for the given vertex array: V_U = W V."""
    vertices = np.asarray(vertices, dtype=np.float64)
    if vertices.ndim != 2 or vertices.shape != (reg.n_vertices, 3):
        raise DimensionMismatch(
            f"vertices shape {vertices.shape} does not match regressor "
            f"({reg.n_vertices}, 3)"
        )
    return np.einsum("sk,skc->sc", reg.weights, vertices[reg.cols])


def _content_hash(mesh, n, seed):
    h = hashlib.sha256()
    h.update(struct.pack("<qq", int(n), int(seed)))
    h.update(np.ascontiguousarray(mesh.vertices).tobytes())
    h.update(np.ascontiguousarray(mesh.faces.astype(np.int64)).tobytes())
    if mesh.face_parts is not None:
        h.update(np.ascontiguousarray(mesh.face_parts.astype(np.int64)).tobytes())
    return h.digest()


def save_regressor(path, reg, mesh, n, seed):
    """Write the triplet cache file for sample_surface(mesh, n, seed)."""
    rows = np.repeat(np.arange(reg.n_samples, dtype=np.uint32), 3)
    cols = reg.cols.astype(np.uint32).ravel()
    weights = reg.weights.astype("<f8").ravel()
    buf = np.zeros(reg.n_samples * 3, dtype=[("row", "<u4"), ("col", "<u4"), ("w", "<f8")])
    buf["row"] = rows
    buf["col"] = cols
    buf["w"] = weights
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(buf.tobytes())
        f.write(_content_hash(mesh, n, seed))


def load_regressor(path, mesh, n, seed):
    """Load a cached regressor; returns None if missing, stale or corrupt."""
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError:
        return None
    if len(blob) < len(_MAGIC) + 32 or blob[: len(_MAGIC)] != _MAGIC:
        return None
    if blob[-32:] != _content_hash(mesh, n, seed):
        return None
    body = blob[len(_MAGIC):-32]
    rec = np.frombuffer(body, dtype=[("row", "<u4"), ("col", "<u4"), ("w", "<f8")])
    if len(rec) != 3 * n or np.any(rec["row"] != np.repeat(np.arange(n, dtype=np.uint32), 3)):
        return None
    cols = rec["col"].astype(np.int64).reshape(n, 3)
    weights = rec["w"].astype(np.float64).reshape(n, 3)
    face_of = {tuple(face): i for i, face in enumerate(map(tuple, mesh.faces.tolist()))}
    try:
        face_idx = np.asarray([face_of[tuple(c)] for c in cols.tolist()], dtype=np.int64)
    except KeyError:
        return None
    parts = (mesh.face_parts[face_idx] if mesh.face_parts is not None
             else np.full(n, -1, dtype=np.int64))
    return SurfaceRegressor(n_vertices=mesh.n_vertices, cols=cols, weights=weights,
                            face_index=face_idx, part_labels=parts)


def cached_sample_surface(mesh, n, seed, cache_path=None):
    """sample_surface with an optional triplet-file cache beside the mesh."""
    if cache_path is not None:
        reg = load_regressor(cache_path, mesh, n, seed)
        if reg is not None:
            return reg
    reg = sample_surface(mesh, n, seed)
    if cache_path is not None:
        save_regressor(cache_path, reg, mesh, n, seed)
    return reg
