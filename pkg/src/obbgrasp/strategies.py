"""Shape-class grasp candidate generators (object frame).

Every generator reads only the box extents and the gripper config. The
object point cloud is accepted for interface parity with the detector
output and deliberately ignored, which is what makes the whole pipeline
insensitive to occlusion of the points.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from obbgrasp.errors import InvalidExtentsError, UnsupportedShapeError
from obbgrasp.geometry import Obb, axis_angle, cross3, diag_length

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
STRATIFIED_ANGLES = (-math.pi / 4, -math.pi / 8, 0.0, math.pi / 8, math.pi / 4)
SPHERE_ASPECT_LIMIT = 1.5
CYLINDER_INSET = 0.1


class ShapeClass(str, Enum):
    BOX = "box"
    SPHERE = "sphere"
    CYLINDER = "cylinder"
    CURVED = "curved"
    CONTAINER = "container"
    TOOL = "tool"
    RING = "ring"

    def __str__(self):
        return self.value


class SamplingMode(str, Enum):
    RANDOM = "random"
    STRATIFIED = "stratified"


class TrajectoryKind(str, Enum):
    LINE_SEGMENT = "line_segment"
    SPHERE_SURFACE = "sphere_surface"
    AXIAL_LINE = "axial_line"


@dataclass(frozen=True, eq=False)
class SamplingTrajectory:
    """Locus of candidate grasp points in the object frame.

    Line segments and axial lines carry ``start``/``end`` and the index of
    their free axis; sphere surfaces carry ``center`` and ``radius``.
    """

    kind: TrajectoryKind
    start: np.ndarray | None = None
    end: np.ndarray | None = None
    free_axis: int | None = None
    center: np.ndarray | None = None
    radius: float | None = None

    def point_at(self, s: float) -> np.ndarray:
        """Point at normalised parameter ``s`` in [0, 1] along a line."""
        if self.kind is TrajectoryKind.SPHERE_SURFACE:
            raise TypeError("sphere trajectories are not parameterised by a scalar")
        return self.start + s * (self.end - self.start)

    def distance(self, p) -> float:
        p = np.asarray(p, dtype=float)
        if self.kind is TrajectoryKind.SPHERE_SURFACE:
            return abs(float(np.linalg.norm(p - self.center)) - self.radius)
        d = self.end - self.start
        s = float(np.clip((p - self.start) @ d / (d @ d), 0.0, 1.0))
        return float(np.linalg.norm(p - self.point_at(s)))


@dataclass(frozen=True)
class GripperConfig:
    category: str = "parallel-jaw"
    w_max: float = 0.085
    gd: float = 0.04
    samples_per_trajectory: int = 31
    sampling_mode: SamplingMode = SamplingMode.STRATIFIED

    def __post_init__(self):
        if not self.w_max > 0 or not self.gd > 0:
            raise ValueError(f"w_max and gd must be positive, got {self.w_max}, {self.gd}")
        if int(self.samples_per_trajectory) < 1:
            raise ValueError("samples_per_trajectory must be >= 1")
        object.__setattr__(self, "sampling_mode", SamplingMode(self.sampling_mode))


@dataclass(frozen=True, eq=False)
class GraspCandidate:
    rotation: np.ndarray
    translation: np.ndarray
    width: float
    depth: float

    @property
    def approach(self) -> np.ndarray:
        return self.rotation[:, 0]

    @property
    def closing(self) -> np.ndarray:
        return self.rotation[:, 1]

    @property
    def normal(self) -> np.ndarray:
        return self.rotation[:, 2]


def _rng(seed: int, stream: int) -> np.random.Generator:
    # counter-based generator, one independent stream per trajectory
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def _check_extents(extents) -> np.ndarray:
    e = np.asarray(extents, dtype=float)
    diag_length(e)
    return e


def box_trajectories(extents) -> list[SamplingTrajectory]:
    """The twelve face mid-lines, in the fixed order used throughout.

    Groups of two: x mid-lines on y=0 / y=y_l (z free), y mid-lines on
    x=0 / x=x_l (z free), x mid-lines on z=0 / z=z_l (y free), z mid-lines
    on x=0 / x=x_l (y free), y mid-lines on z=0 / z=z_l (x free) and z
    mid-lines on y=0 / y=y_l (x free).
    """
    xl, yl, zl = _check_extents(extents)
    xm, ym, zm = xl / 2, yl / 2, zl / 2
    spec = [
        ((xm, 0.0, None), 2), ((xm, yl, None), 2),
        ((0.0, ym, None), 2), ((xl, ym, None), 2),
        ((xm, None, 0.0), 1), ((xm, None, zl), 1),
        ((0.0, None, zm), 1), ((xl, None, zm), 1),
        ((None, ym, 0.0), 0), ((None, ym, zl), 0),
        ((None, 0.0, zm), 0), ((None, yl, zm), 0),
    ]
    span = (xl, yl, zl)
    out = []
    for fixed, axis in spec:
        start = np.array([0.0 if v is None else v for v in fixed])
        end = start.copy()
        end[axis] = span[axis]
        out.append(SamplingTrajectory(TrajectoryKind.LINE_SEGMENT, start, end, axis))
    return out


def _box_pose(p: np.ndarray, center: np.ndarray, axis: int):
    target = center.copy()
    target[axis] = p[axis]
    x = target - p
    x = x / np.linalg.norm(x)
    e = np.zeros(3)
    e[axis] = 1.0
    y = cross3(x, e)
    y = y / np.linalg.norm(y)
    return np.column_stack([x, y, cross3(x, y)])


def generate_box_grasps(obb: Obb, config: GripperConfig, seed: int = 0, points=None, quiet: bool = False) -> list[GraspCandidate]:
    """Dense two-opposing-face grasps along every face mid-line.

    Per sampled point the base pose is followed by a copy rotated about the
    closing axis Y. Stratified mode places N points at cell midpoints of
    each trajectory and cycles the rotation through ``STRATIFIED_ANGLES``;
    random mode draws both uniformly. Width is the box extent along Y.
    """
    ext = _check_extents(obb.extents)
    center = ext / 2.0
    depth = float(min(ext[0] / 2, ext[1] / 2, ext[2] / 2, config.gd))
    n = int(config.samples_per_trajectory)
    stratified = config.sampling_mode is SamplingMode.STRATIFIED

    out: list[GraspCandidate] = []
    for ti, traj in enumerate(box_trajectories(ext)):
        if stratified:
            params = [(i + 0.5) / n for i in range(n)]
            angles = [STRATIFIED_ANGLES[i % len(STRATIFIED_ANGLES)] for i in range(n)]
        else:
            rng = _rng(seed, ti)
            params = rng.uniform(0.0, 1.0, n).tolist()
            angles = rng.uniform(-math.pi / 4, math.pi / 4, n).tolist()
        for s, angle in zip(params, angles):
            p = traj.point_at(s)
            r = _box_pose(p, center, traj.free_axis)
            y = r[:, 1]
            width = float(np.abs(y) @ ext)
            out.append(GraspCandidate(r, p, width, depth))
            rotated = axis_angle(y, angle) @ r
            rotated[:, 1] = y
            out.append(GraspCandidate(rotated, p, width, depth))
    return out


def _tangent_basis(u: np.ndarray) -> np.ndarray:
    helper = np.array([1.0, 0.0, 0.0]) if abs(u[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t = cross3(u, helper)
    return t / np.linalg.norm(t)


def shape_warning(shape, extents) -> str | None:
    """Non-fatal mismatch between a shape class and its box, if any."""
    ext = np.asarray(extents, dtype=float)
    if ShapeClass(shape) is ShapeClass.SPHERE and ext.max() / ext.min() > SPHERE_ASPECT_LIMIT:
        return (
            f"box extents {ext.tolist()} are not spherical (aspect > {SPHERE_ASPECT_LIMIT}); "
            "using the minimum extent as diameter"
        )
    return None


def generate_sphere_grasps(
    obb: Obb, config: GripperConfig, seed: int = 0, points=None, quiet: bool = False
) -> list[GraspCandidate]:
    ext = _check_extents(obb.extents)
    note = shape_warning(ShapeClass.SPHERE, ext)
    if note and not quiet:
        warnings.warn(note, stacklevel=2)
    r = float(ext.min() / 2)
    center = ext / 2.0
    n = int(config.samples_per_trajectory)
    width, depth = 2 * r, float(min(r, config.gd))

    out = []
    if config.sampling_mode is SamplingMode.STRATIFIED:
        for i in range(n):
            z = 1.0 - 2.0 * (i + 0.5) / n
            rho = math.sqrt(max(0.0, 1.0 - z * z))
            phi = i * GOLDEN_ANGLE
            u = np.array([rho * math.cos(phi), rho * math.sin(phi), z])
            y = np.array([-math.sin(phi), math.cos(phi), 0.0])
            out.append(_sphere_candidate(center, r, u, y, width, depth))
    else:
        rng = _rng(seed, 0)
        for _ in range(n):
            u = rng.normal(size=3)
            u /= np.linalg.norm(u)
            t1 = _tangent_basis(u)
            t2 = cross3(u, t1)
            a = rng.uniform(0.0, 2 * math.pi)
            y = math.cos(a) * t1 + math.sin(a) * t2
            out.append(_sphere_candidate(center, r, u, y, width, depth))
    return out


def _sphere_candidate(center, r, u, y, width, depth) -> GraspCandidate:
    x = -u
    y = y - (y @ x) * x
    y = y / np.linalg.norm(y)
    rot = np.column_stack([x, y, cross3(x, y)])
    return GraspCandidate(rot, center + r * u, width, depth)


def cylinder_trajectories(extents) -> list[SamplingTrajectory]:
    """Axis line used for side heights, then the top cap centre line."""
    xl, yl, zl = _check_extents(extents)
    cx, cy = xl / 2, yl / 2
    side = SamplingTrajectory(
        TrajectoryKind.AXIAL_LINE,
        np.array([cx, cy, CYLINDER_INSET * zl]),
        np.array([cx, cy, (1 - CYLINDER_INSET) * zl]),
        2,
    )
    top = SamplingTrajectory(TrajectoryKind.AXIAL_LINE, np.array([cx, cy, zl]), np.array([cx, cy, zl]), 2)
    return [side, top]


def generate_cylinder_grasps(obb: Obb, config: GripperConfig, seed: int = 0, points=None, quiet: bool = False) -> list[GraspCandidate]:
    """Side grasps around an upright (object z) axis plus top-down cap grasps.

    Side points sit on the lateral surface at heights inset 10% from either
    end, approached radially with a tangential closing axis. The top family
    (N // 4 poses) approaches down the axis from the cap centre with radial
    closing directions spread over a half turn.
    """
    ext = _check_extents(obb.extents)
    r = float(min(ext[0], ext[1]) / 2)
    h = float(ext[2])
    cx, cy = ext[0] / 2, ext[1] / 2
    n = int(config.samples_per_trajectory)
    n_top = n // 4
    width = 2 * r
    side_depth = float(min(r, config.gd))
    top_depth = float(min(h / 2, config.gd))
    lo, hi = CYLINDER_INSET * h, (1 - CYLINDER_INSET) * h

    if config.sampling_mode is SamplingMode.STRATIFIED:
        heights = [lo + (hi - lo) * (i + 0.5) / n for i in range(n)]
        phis = [i * GOLDEN_ANGLE for i in range(n)]
        top_phis = [math.pi * j / n_top for j in range(n_top)]
    else:
        rng = _rng(seed, 0)
        heights = rng.uniform(lo, hi, n).tolist()
        phis = rng.uniform(0.0, 2 * math.pi, n).tolist()
        top_phis = _rng(seed, 1).uniform(0.0, math.pi, n_top).tolist()

    out = []
    for t, phi in zip(heights, phis):
        c, s = math.cos(phi), math.sin(phi)
        x = np.array([-c, -s, 0.0])
        y = np.array([-s, c, 0.0])
        rot = np.column_stack([x, y, cross3(x, y)])
        out.append(GraspCandidate(rot, np.array([cx + r * c, cy + r * s, t]), width, side_depth))
    top = np.array([cx, cy, h])
    for phi in top_phis:
        x = np.array([0.0, 0.0, -1.0])
        y = np.array([math.cos(phi), math.sin(phi), 0.0])
        rot = np.column_stack([x, y, cross3(x, y)])
        out.append(GraspCandidate(rot, top.copy(), width, top_depth))
    return out


Generator = Callable[..., Sequence[GraspCandidate]]

_STRATEGIES: dict[ShapeClass, Generator] = {
    ShapeClass.BOX: generate_box_grasps,
    ShapeClass.SPHERE: generate_sphere_grasps,
    ShapeClass.CYLINDER: generate_cylinder_grasps,
}


def strategy_for(shape) -> Generator:
    shape = ShapeClass(shape)
    try:
        return _STRATEGIES[shape]
    except KeyError:
        raise UnsupportedShapeError(shape) from None


def expected_count(shape, n: int) -> int:
    shape = ShapeClass(shape)
    return {ShapeClass.BOX: 24 * n, ShapeClass.SPHERE: n, ShapeClass.CYLINDER: n + n // 4}[shape]


__all__ = [
    "GraspCandidate",
    "GripperConfig",
    "InvalidExtentsError",
    "SamplingMode",
    "SamplingTrajectory",
    "ShapeClass",
    "STRATIFIED_ANGLES",
    "box_trajectories",
    "cylinder_trajectories",
    "expected_count",
    "generate_box_grasps",
    "generate_cylinder_grasps",
    "generate_sphere_grasps",
    "shape_warning",
    "strategy_for",
]
