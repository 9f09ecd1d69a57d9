"""Scene-level grasp generation and the two target-query modes.

Mode 1 (``precompute`` + ``query``) generates grasps for every object up
front so a later label query is a dictionary lookup. Mode 2
(``query_on_demand``) generates only for objects carrying the requested
label, still using every other box as proximity context. Both derive each
object's random stream from ``seed ^ object_id``, so they agree exactly.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from obbgrasp.errors import DuplicateIdError, SceneFormatError, StaleIndexError, UnsupportedShapeError
from obbgrasp.geometry import Obb, as_vec3, sample_obb_surface, transform_grasp
from obbgrasp.scoring import (
    FilterThresholds,
    SceneContext,
    ScoredGrasp,
    StabilityParams,
    apply_filters_and_rank,
    neighbour_samples,
)
from obbgrasp.strategies import GraspCandidate, GripperConfig, ShapeClass, shape_warning, strategy_for

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ObbDetection:
    id: int
    label: str
    shape_class: ShapeClass
    confidence: float
    obb: Obb
    points: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "shape_class", ShapeClass(self.shape_class))
        if not 0.0 <= self.confidence <= 1.0:
            raise SceneFormatError(f"object {self.id}: confidence {self.confidence} not in [0, 1]")
        if self.points is not None:
            pts = np.array(self.points, dtype=float).reshape(-1, 3)
            pts.setflags(write=False)
            object.__setattr__(self, "points", pts)

    def without_points(self) -> ObbDetection:
        return replace(self, points=None)


@dataclass(frozen=True, eq=False)
class Scene:
    scene_id: str
    gravity: np.ndarray
    objects: tuple[ObbDetection, ...]
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        g = as_vec3(self.gravity, "gravity")
        if abs(np.linalg.norm(g) - 1.0) > 1e-9:
            raise SceneFormatError(f"gravity must be unit length, got |g|={np.linalg.norm(g):.12g}")
        object.__setattr__(self, "gravity", g)
        object.__setattr__(self, "objects", tuple(self.objects))
        seen = set()
        for o in self.objects:
            if o.id in seen:
                raise DuplicateIdError(f"duplicate object id {o.id}")
            seen.add(o.id)

    def by_id(self, object_id: int) -> ObbDetection:
        for o in self.objects:
            if o.id == object_id:
                return o
        raise KeyError(object_id)


@dataclass(frozen=True)
class ObjectGrasps:
    object_id: int
    label: str
    grasps: tuple[ScoredGrasp, ...]
    warning: str | None = None


@dataclass(frozen=True)
class GraspSet:
    scene_id: str
    objects: tuple[ObjectGrasps, ...]
    config_digest: str = ""
    seed: int | None = None

    @property
    def warnings(self) -> list[str]:
        return [o.warning for o in self.objects if o.warning]

    def for_object(self, object_id: int) -> ObjectGrasps:
        for o in self.objects:
            if o.object_id == object_id:
                return o
        raise KeyError(object_id)


def object_seed(seed: int, object_id: int) -> int:
    return int(seed) ^ int(object_id)


def _to_camera_frame(candidates: Sequence[GraspCandidate], obb: Obb) -> list[GraspCandidate]:
    out = []
    for c in candidates:
        r, t = transform_grasp(obb.pose, (c.rotation, c.translation))
        out.append(GraspCandidate(r, t, c.width, c.depth))
    return out


def grasp_object(
    scene: Scene,
    target: ObbDetection,
    gripper: GripperConfig,
    thresholds: FilterThresholds,
    params: StabilityParams,
    k: int | None,
    seed: int = 0,
    samples_cache: Mapping[int, np.ndarray] | None = None,
) -> ObjectGrasps:
    """Generate, filter, and rank grasps for one detection of ``scene``."""
    try:
        generate = strategy_for(target.shape_class)
    except UnsupportedShapeError as exc:
        msg = f"object {target.id} ({target.label}): {exc}"
        log.warning(msg)
        return ObjectGrasps(target.id, target.label, (), msg)

    local = generate(target.obb, gripper, object_seed(seed, target.id), target.points, quiet=True)
    note = shape_warning(target.shape_class, target.obb.extents)
    if note:
        log.warning("object %s (%s): %s", target.id, target.label, note)

    others = [o for o in scene.objects if o.id != target.id]
    if samples_cache is not None:
        parts = [samples_cache[o.id] for o in others]
        pts = np.vstack(parts) if parts else np.empty((0, 3))
    else:
        pts = neighbour_samples([o.obb for o in others], thresholds.surface_samples)
    context = SceneContext(
        target=target.obb,
        confidence=target.confidence,
        others=tuple(o.obb for o in others),
        w_max=gripper.w_max,
        neighbour_points=pts,
    )
    ranked = apply_filters_and_rank(_to_camera_frame(local, target.obb), context, thresholds, params, k)
    return ObjectGrasps(target.id, target.label, tuple(ranked), note)


def _effective_thresholds(scene: Scene, thresholds: FilterThresholds) -> FilterThresholds:
    # the scene's own gravity direction wins over the configured default
    if np.array_equal(scene.gravity, thresholds.gravity):
        return thresholds
    return replace(thresholds, gravity=scene.gravity)


def _samples_cache(scene: Scene, thresholds: FilterThresholds) -> dict[int, np.ndarray]:
    return {o.id: sample_obb_surface(o.obb, thresholds.surface_samples) for o in scene.objects}


def generate_scene_grasps(
    scene: Scene,
    gripper: GripperConfig | None = None,
    thresholds: FilterThresholds | None = None,
    params: StabilityParams | None = None,
    k: int | None = 10,
    seed: int = 0,
    *,
    config_digest: str = "",
    max_workers: int | None = None,
) -> GraspSet:
    """Ranked grasps for every object in ``scene``.

    Unsupported shape classes produce an empty entry carrying a warning
    rather than aborting the scene. With ``max_workers`` objects are
    processed on a thread pool; the result does not depend on it.
    """
    gripper = gripper or GripperConfig()
    thresholds = _effective_thresholds(scene, thresholds or FilterThresholds())
    params = params or StabilityParams()
    cache = _samples_cache(scene, thresholds)

    def work(obj):
        return grasp_object(scene, obj, gripper, thresholds, params, k, seed, cache)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            entries = list(pool.map(work, scene.objects))
    else:
        entries = [work(o) for o in scene.objects]
    return GraspSet(scene.scene_id, tuple(entries), config_digest, seed)


@dataclass(frozen=True)
class GraspIndex:
    scene_id: str
    built_at: float
    by_label: Mapping[str, tuple[ObjectGrasps, ...]]
    grasp_set: GraspSet


def precompute(scene: Scene, gripper=None, thresholds=None, params=None, k: int | None = 10, seed: int = 0, **kw) -> GraspIndex:
    grasp_set = generate_scene_grasps(scene, gripper, thresholds, params, k, seed, **kw)
    groups: dict[str, list[ObjectGrasps]] = {}
    for entry in grasp_set.objects:
        groups.setdefault(entry.label, []).append(entry)
    frozen = MappingProxyType({label: tuple(v) for label, v in groups.items()})
    return GraspIndex(scene.scene_id, time.time(), frozen, grasp_set)


def query(index: GraspIndex, label: str, scene_id: str | None = None) -> list[ObjectGrasps]:
    """Pure lookup of every object with ``label``; unknown labels give []."""
    if scene_id is not None and scene_id != index.scene_id:
        raise StaleIndexError(f"index built for scene {index.scene_id!r}, queried for {scene_id!r}")
    hits = index.by_label.get(label)
    if hits is None:
        log.info("label %r not found in scene %s", label, index.scene_id)
        return []
    return list(hits)


def query_on_demand(
    scene: Scene,
    label: str,
    gripper=None,
    thresholds=None,
    params=None,
    k: int | None = 10,
    seed: int = 0,
) -> list[ObjectGrasps]:
    gripper = gripper or GripperConfig()
    thresholds = _effective_thresholds(scene, thresholds or FilterThresholds())
    params = params or StabilityParams()
    targets = [o for o in scene.objects if o.label == label]
    if not targets:
        log.info("label %r not found in scene %s", label, scene.scene_id)
        return []
    return [grasp_object(scene, t, gripper, thresholds, params, k, seed) for t in targets]
