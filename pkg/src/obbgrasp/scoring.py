"""Feasibility filters, the COG stability metric, and top-k ranking."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from obbgrasp.geometry import Obb, as_vec3, obb_corners, sample_obb_surface
from obbgrasp.strategies import GraspCandidate

DEFAULT_GRAVITY = (0.0, 1.0, 0.0)


@dataclass(frozen=True, eq=False)
class FilterThresholds:
    """Filter parameters.

    th0 bounds the cosine distance between approach axis and gravity, th1 is
    the required height (m) of the grasp point above the lowest box corner,
    th2 the required clearance (m) to other objects' surface samples.
    ``table_offset``, when set, replaces the lowest-corner reference with a
    global table plane at that gravity coordinate.
    """

    th0: float = 1.05
    th1: float = 0.02
    th2: float = 0.05
    gravity: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_GRAVITY))
    surface_samples: int = 98
    table_offset: float | None = None

    def __post_init__(self):
        g = as_vec3(self.gravity, "gravity")
        if abs(np.linalg.norm(g) - 1.0) > 1e-9:
            raise ValueError(f"gravity must be unit length, got |g|={np.linalg.norm(g):.12g}")
        if not 0.0 < self.th0 <= 2.0:
            raise ValueError(f"th0 must lie in (0, 2], got {self.th0}")
        if self.th1 < 0.0 or self.th2 < 0.0:
            raise ValueError("th1 and th2 must be non-negative")
        if int(self.surface_samples) < 8:
            raise ValueError("surface_samples must be >= 8")
        object.__setattr__(self, "gravity", g)


@dataclass(frozen=True)
class StabilityParams:
    alpha: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass(frozen=True, eq=False)
class ScoredGrasp:
    candidate: GraspCandidate
    stability: float
    confidence: float
    score: float
    d1: float
    d2: float

    @property
    def rotation(self) -> np.ndarray:
        return self.candidate.rotation

    @property
    def translation(self) -> np.ndarray:
        return self.candidate.translation

    @property
    def width(self) -> float:
        return self.candidate.width

    @property
    def depth(self) -> float:
        return self.candidate.depth


def filter_orientation(x, thresholds: FilterThresholds) -> bool:
    x = np.asarray(x, dtype=float)
    g = thresholds.gravity
    dcos = 1.0 - float(x @ g) / (np.linalg.norm(x) * np.linalg.norm(g))
    return dcos < thresholds.th0


def table_level(corners, thresholds: FilterThresholds) -> float:
    if thresholds.table_offset is not None:
        return float(thresholds.table_offset)
    return float(np.max(np.asarray(corners) @ thresholds.gravity))


def filter_table_clearance(translation, corners, thresholds: FilterThresholds) -> bool:
    margin = table_level(corners, thresholds) - float(np.asarray(translation) @ thresholds.gravity)
    return margin > thresholds.th1


def filter_width(w: float, w_max: float) -> bool:
    return w_max - w > 0


def neighbour_samples(others: Sequence[Obb], n: int) -> np.ndarray:
    if not others:
        return np.empty((0, 3))
    return np.vstack([sample_obb_surface(o, n) for o in others])


def min_distance(points, samples) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if len(samples) == 0:
        return np.full(len(pts), math.inf)
    diff = pts[:, None, :] - samples[None, :, :]
    return np.sqrt(np.min(np.einsum("ijk,ijk->ij", diff, diff), axis=1))


def filter_proximity(translation, other_objects: Sequence[Obb], thresholds: FilterThresholds) -> bool:
    samples = neighbour_samples(other_objects, thresholds.surface_samples)
    return bool(min_distance(translation, samples)[0] > thresholds.th2)


def stability_terms(rotations, translations, obb: Obb, params: StabilityParams):
    """Vectorised stability: returns arrays (M, d1, d2).

    d2 is the distance from the grasp point to the box centre, d1 the
    distance from the centre to the gripper plane (span of X and Y through
    the grasp point). Both are normalised by half the box diagonal.
    """
    rotations = np.asarray(rotations, dtype=float).reshape(-1, 3, 3)
    translations = np.asarray(translations, dtype=float).reshape(-1, 3)
    v = obb.center - translations
    d2 = np.linalg.norm(v, axis=1)
    d1 = np.minimum(np.abs(np.einsum("ij,ij->i", rotations[:, :, 2], v)), d2)
    half = obb.diag / 2.0
    a = params.alpha
    m = a * (1.0 - d1 / half) + (1.0 - a) * (1.0 - d2 / half)
    return m, d1, d2


def stability(grasp: GraspCandidate, obb: Obb, params: StabilityParams) -> tuple[float, float, float]:
    m, d1, d2 = stability_terms(grasp.rotation, grasp.translation, obb, params)
    return float(m[0]), float(d1[0]), float(d2[0])


def score(m: float, confidence: float) -> float:
    return confidence * m


@dataclass(frozen=True, eq=False)
class SceneContext:
    """Everything the filters need to know about the grasped object's surroundings."""

    target: Obb
    confidence: float
    others: tuple[Obb, ...] = ()
    w_max: float = 0.085
    neighbour_points: np.ndarray | None = None

    def samples(self, thresholds: FilterThresholds) -> np.ndarray:
        if self.neighbour_points is not None:
            return self.neighbour_points
        return neighbour_samples(self.others, thresholds.surface_samples)


def filter_mask(candidates: Sequence[GraspCandidate], context: SceneContext, thresholds: FilterThresholds) -> np.ndarray:
    """Boolean survivor mask over ``candidates`` for all four filters."""
    if not candidates:
        return np.zeros(0, dtype=bool)
    rot = np.stack([c.rotation for c in candidates])
    pos = np.stack([c.translation for c in candidates])
    widths = np.array([c.width for c in candidates])
    g = thresholds.gravity

    x = rot[:, :, 0]
    dcos = 1.0 - (x @ g) / np.linalg.norm(x, axis=1)
    ok = dcos < thresholds.th0
    ok &= (table_level(obb_corners(context.target), thresholds) - pos @ g) > thresholds.th1
    ok &= (context.w_max - widths) > 0
    ok &= min_distance(pos, context.samples(thresholds)) > thresholds.th2
    return ok


def apply_filters_and_rank(
    candidates: Sequence[GraspCandidate],
    context: SceneContext,
    thresholds: FilterThresholds,
    params: StabilityParams,
    k: int | None,
) -> list[ScoredGrasp]:
    """Filter camera-frame candidates, score survivors, and keep the top ``k``.

    Order is score descending, then stability descending, then d2
    ascending, then input position, so equal inputs always rank equally.
    """
    mask = filter_mask(candidates, context, thresholds)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return []
    kept = [candidates[i] for i in idx]
    m, d1, d2 = stability_terms(
        np.stack([c.rotation for c in kept]), np.stack([c.translation for c in kept]), context.target, params
    )
    s = context.confidence * m
    order = sorted(range(len(kept)), key=lambda i: (-s[i], -m[i], d2[i], i))
    if k is not None:
        order = order[:k]
    return [
        ScoredGrasp(kept[i], float(m[i]), float(context.confidence), float(s[i]), float(d1[i]), float(d2[i]))
        for i in order
    ]
