"""Rigid transforms and oriented-bounding-box geometry.

Object frame convention: a box of extents (x_l, y_l, z_l) spans
[0, x_l] x [0, y_l] x [0, z_l], i.e. its minimum corner sits at the object
origin. ``Obb.pose`` maps object-frame coordinates into the camera frame.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from obbgrasp.errors import (
    InvalidAxesError,
    InvalidExtentsError,
    InvalidTransformError,
    TooFewSamplesError,
)

ORTHO_TOL = 1e-9
AXIS_DOT_TOL = 1e-6
UNIT_TOL = 1e-6


def as_vec3(value, name: str = "vector") -> np.ndarray:
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite components: {arr.tolist()}")
    arr.setflags(write=False)
    return arr


def cross3(a, b) -> np.ndarray:
    """Cross product of two 3-vectors; much cheaper than np.cross per call."""
    return np.array([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise InvalidAxesError("cannot normalize a zero vector")
    return v / n


def is_rotation(r: np.ndarray, tol: float = ORTHO_TOL) -> bool:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3) or not np.all(np.isfinite(r)):
        return False
    if np.max(np.abs(r.T @ r - np.eye(3))) >= tol:
        return False
    return abs(np.linalg.det(r) - 1.0) < tol


def rotation_from_xy(x, y) -> np.ndarray:
    """Build ``R = [X, Y, X x Y]`` from an approach and a closing axis.

    Both inputs must be unit vectors (within 1e-6) and mutually orthogonal
    (|X.Y| < 1e-6). Y is re-orthogonalised against X so the result is a
    proper rotation to machine precision.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if abs(nx - 1.0) > UNIT_TOL or abs(ny - 1.0) > UNIT_TOL:
        raise InvalidAxesError(f"axes must be unit length, got |X|={nx:.9g}, |Y|={ny:.9g}")
    if abs(float(x @ y)) >= AXIS_DOT_TOL:
        raise InvalidAxesError(f"axes not orthogonal: X.Y={float(x @ y):.3g}")
    x = x / nx
    y = y - (x @ y) * x
    y = y / np.linalg.norm(y)
    z = cross3(x, y)
    z = z / np.linalg.norm(z)
    return np.column_stack([x, y, z])


def axis_angle(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a unit ``axis``."""
    k = unit(axis)
    kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + math.sin(angle) * kx + (1.0 - math.cos(angle)) * (kx @ kx)


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Maps object-frame coordinates to the parent (camera/robot) frame."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.array(self.rotation, dtype=float).reshape(3, 3)
        if not is_rotation(r):
            raise InvalidTransformError("rotation is not orthonormal with det=1 (tol 1e-9)")
        r.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", as_vec3(self.translation, "translation"))

    @classmethod
    def identity(cls) -> RigidTransform:
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_translation(cls, t) -> RigidTransform:
        return cls(np.eye(3), t)

    def inverse(self) -> RigidTransform:
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def compose(self, other: RigidTransform) -> RigidTransform:
        """``self o other``: apply ``other`` first."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation

    def apply_vector(self, vectors) -> np.ndarray:
        return np.asarray(vectors, dtype=float) @ self.rotation.T

    def allclose(self, other: RigidTransform, atol: float = 1e-9) -> bool:
        return bool(
            np.allclose(self.rotation, other.rotation, rtol=0.0, atol=atol)
            and np.allclose(self.translation, other.translation, rtol=0.0, atol=atol)
        )


def diag_length(extents) -> float:
    e = np.asarray(extents, dtype=float).reshape(-1)
    if e.shape != (3,) or not np.all(np.isfinite(e)) or np.any(e <= 0.0):
        raise InvalidExtentsError(f"extents must be three positive reals, got {e.tolist()}")
    return float(math.sqrt(float(e @ e)))


@dataclass(frozen=True, eq=False)
class Obb:
    pose: RigidTransform
    extents: np.ndarray

    def __post_init__(self):
        ext = as_vec3(self.extents, "extents")
        if np.any(ext <= 0.0):
            raise InvalidExtentsError(f"extents must be strictly positive, got {ext.tolist()}")
        object.__setattr__(self, "extents", ext)

    @classmethod
    def axis_aligned(cls, extents, origin=(0.0, 0.0, 0.0)) -> Obb:
        return cls(RigidTransform.from_translation(origin), extents)

    @property
    def center_local(self) -> np.ndarray:
        return self.extents / 2.0

    @property
    def center(self) -> np.ndarray:
        """Box centre in the camera frame (used as the COG)."""
        return self.pose.apply(self.center_local)

    @property
    def diag(self) -> float:
        return diag_length(self.extents)

    def to_local(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return (pts - self.pose.translation) @ self.pose.rotation

    def contains(self, points, tol: float = 1e-9) -> np.ndarray:
        local = self.to_local(np.atleast_2d(points))
        return np.all((local >= -tol) & (local <= self.extents + tol), axis=-1)

    def surface_distance(self, points) -> np.ndarray:
        """Unsigned distance from each point to the box boundary."""
        local = self.to_local(np.atleast_2d(points))
        e = self.extents
        outside = np.maximum(np.maximum(-local, local - e), 0.0)
        out_d = np.linalg.norm(outside, axis=-1)
        in_d = np.min(np.minimum(local, e - local), axis=-1)
        return np.where(np.any(outside > 0.0, axis=-1), out_d, np.abs(in_d))

    def point_distance(self, points) -> np.ndarray:
        """Distance to the solid box (zero inside)."""
        local = self.to_local(np.atleast_2d(points))
        outside = np.maximum(np.maximum(-local, local - self.extents), 0.0)
        return np.linalg.norm(outside, axis=-1)


def obb_corners(obb: Obb) -> np.ndarray:
    """The 8 box corners in the camera frame, binary-counting order (z fastest)."""
    local = np.array(list(itertools.product((0, 1), repeat=3)), dtype=float) * obb.extents
    return obb.pose.apply(local)


def _lattice_divisions(extents: np.ndarray, level: int) -> tuple[int, int, int]:
    scale = extents / extents.max()
    return tuple(max(1, int(round(level * s))) for s in scale)


def _boundary_count(k) -> int:
    a, b, c = (ki + 1 for ki in k)
    return a * b * c - max(a - 2, 0) * max(b - 2, 0) * max(c - 2, 0)


def _boundary_lattice(k) -> list[tuple[int, int, int]]:
    pts = []
    for idx in itertools.product(range(k[0] + 1), range(k[1] + 1), range(k[2] + 1)):
        if any(i == 0 or i == ki for i, ki in zip(idx, k)):
            pts.append(idx)
    return pts


def _on_coarse(idx, fine, coarse) -> bool:
    # fine index i sits on the coarse lattice iff i/kf == j/kc for some integer j
    return all((i * kc) % kf == 0 for i, kf, kc in zip(idx, fine, coarse))


def _face_of(idx, k) -> int:
    for axis in range(3):
        if idx[axis] == 0:
            return 2 * axis
        if idx[axis] == k[axis]:
            return 2 * axis + 1
    raise AssertionError("index not on the boundary")


def _allocate(total: int, weights: list[float], caps: list[int]) -> list[int]:
    """Largest-remainder allocation of ``total`` units honouring per-slot caps."""
    alloc = [0] * len(weights)
    remaining = total
    open_slots = [i for i, c in enumerate(caps) if c > 0]
    while remaining > 0 and open_slots:
        wsum = sum(weights[i] for i in open_slots)
        shares = {i: remaining * weights[i] / wsum for i in open_slots}
        floors = {i: min(int(math.floor(shares[i])), caps[i] - alloc[i]) for i in open_slots}
        for i in open_slots:
            alloc[i] += floors[i]
        remaining -= sum(floors.values())
        order = sorted(open_slots, key=lambda i: (-(shares[i] - math.floor(shares[i])), i))
        for i in order:
            if remaining == 0:
                break
            if alloc[i] < caps[i]:
                alloc[i] += 1
                remaining -= 1
        open_slots = [i for i in open_slots if alloc[i] < caps[i]]
    return alloc


def sample_obb_surface(obb: Obb, n: int) -> np.ndarray:
    """Deterministic stratified surface samples, returned in the camera frame.

    The box surface is covered by the boundary nodes of a regular lattice
    whose spacing is roughly uniform across axes. The densest lattice with at
    most ``n`` boundary nodes is taken whole (corners first); any remaining
    budget is filled with nodes of the next finer lattice, spread over the
    six faces in proportion to face area. For a cube, n = 8, 26, 56, 98 are
    exact lattices.
    """
    if n < 8:
        raise TooFewSamplesError(f"need at least 8 surface samples, got {n}")
    ext = obb.extents
    level = 1
    k = _lattice_divisions(ext, 1)
    while True:
        nk = _lattice_divisions(ext, level + 1)
        if _boundary_count(nk) > n:
            break
        level += 1
        k = nk

    corners = [idx for idx in itertools.product(*[(0, ki) for ki in k])]
    corner_set = set(corners)
    rest = [idx for idx in _boundary_lattice(k) if idx not in corner_set]
    frac = [tuple(i / ki for i, ki in zip(idx, k)) for idx in corners + rest]

    extra = n - len(frac)
    if extra > 0:
        level_up = level + 1
        fine = _lattice_divisions(ext, level_up)
        while _boundary_count(fine) - _boundary_count(k) < extra:
            level_up += 1
            fine = _lattice_divisions(ext, level_up)
        by_face: list[list[tuple[int, int, int]]] = [[] for _ in range(6)]
        for idx in _boundary_lattice(fine):
            if not _on_coarse(idx, fine, k):
                by_face[_face_of(idx, fine)].append(idx)
        areas = [ext[1] * ext[2]] * 2 + [ext[0] * ext[2]] * 2 + [ext[0] * ext[1]] * 2
        alloc = _allocate(extra, areas, [len(f) for f in by_face])
        for face, q in zip(by_face, alloc):
            for j in range(q):
                idx = face[int((j + 0.5) * len(face) / q)]
                frac.append(tuple(i / kf for i, kf in zip(idx, fine)))

    local = np.array(frac, dtype=float) * ext
    return obb.pose.apply(local)


def transform_grasp(t: RigidTransform, pose) -> tuple[np.ndarray, np.ndarray]:
    """Re-express an object-frame grasp ``(R, T)`` in the parent frame of ``t``."""
    r_in, t_in = pose
    r_in = np.asarray(r_in, dtype=float)
    t_in = np.asarray(t_in, dtype=float)
    return t.rotation @ r_in, t.rotation @ t_in + t.translation
