"""Synthetic tabletop scenes, occlusion, analytic oracles, and the benchmark.

The benchmark replaces human grasp judgement with ``feasibility_oracle``,
a set of four geometric checks on the gripper against the scene boxes and
the table plane. Scores are reported as the mean of (feasible x stability)
over the top five grasps of up to three objects per scene.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from shapely.geometry import Polygon, box as shapely_box

from obbgrasp.config import RunConfig
from obbgrasp.errors import PlacementError
from obbgrasp.geometry import Obb, RigidTransform, cross3, obb_corners
from obbgrasp.pipeline import ObbDetection, Scene, generate_scene_grasps
from obbgrasp.scoring import ScoredGrasp, StabilityParams
from obbgrasp.strategies import ShapeClass

QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)

LABELS = {
    "box": ("small box", "power bank", "tea box", "card box"),
    "sphere": ("apple", "orange", "ball"),
    "cylinder": ("can", "bottle", "cup"),
}


@dataclass(frozen=True)
class SceneSpec:
    """Distribution of synthetic tabletop scenes.

    Extents are in meters. Box extents are (footprint a, footprint b,
    height) ranges. The table is the plane at gravity coordinate
    ``table_offset``; ``region`` is the placement rectangle on it, centred
    at ``region_center`` in the two horizontal camera axes.
    """

    min_objects: int = 1
    max_objects: int = 8
    shape_weights: Mapping[str, float] = field(
        default_factory=lambda: {"box": 0.45, "cylinder": 0.35, "sphere": 0.2}
    )
    box_extents: tuple = ((0.04, 0.08), (0.08, 0.15), (0.021, 0.045))
    cylinder_radius: tuple = (0.02, 0.04)
    cylinder_height: tuple = (0.08, 0.2)
    sphere_radius: tuple = (0.025, 0.04)
    region: tuple = (0.7, 0.5)
    region_center: tuple = (0.0, 0.7)
    table_offset: float = 0.3
    gravity: tuple = (0.0, 1.0, 0.0)
    min_gap: float = 0.03
    points_per_object: int = 300
    confidence_range: tuple = (0.8, 1.0)
    max_attempts: int = 500
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.min_objects <= self.max_objects <= 8:
            raise ValueError("object count range must lie within [1, 8]")
        if self.min_gap < 0:
            raise ValueError("min_gap must be non-negative")
        bad = set(self.shape_weights) - {"box", "sphere", "cylinder"}
        if bad:
            raise ValueError(f"unsupported shape classes in mix: {sorted(bad)}")

    @classmethod
    def from_dict(cls, data: dict) -> SceneSpec:
        fields = {}
        for k, v in data.items():
            fields[k] = _tuplify(v) if isinstance(v, list) else v
        return cls(**fields)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _tuplify(v):
    return tuple(_tuplify(x) if isinstance(x, list) else x for x in v)


def _horizontal_axes(gravity: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    up = -gravity
    helper = np.array([1.0, 0.0, 0.0])
    if abs(helper @ gravity) > 0.9:
        helper = np.array([0.0, 0.0, 1.0])
    h1 = helper - (helper @ gravity) * gravity
    h1 /= np.linalg.norm(h1)
    return h1, cross3(up, h1)


def _surface_points(shape: str, ext: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    if shape == "sphere":
        u = rng.normal(size=(n, 3))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        return ext / 2 + (ext.min() / 2) * u
    if shape == "cylinder":
        r, h = min(ext[0], ext[1]) / 2, ext[2]
        side, cap = 2 * math.pi * r * h, math.pi * r * r
        which = rng.choice(3, size=n, p=np.array([side, cap, cap]) / (side + 2 * cap))
        phi = rng.uniform(0, 2 * math.pi, n)
        rad = np.where(which == 0, r, r * np.sqrt(rng.uniform(0, 1, n)))
        z = np.where(which == 0, rng.uniform(0, h, n), np.where(which == 1, 0.0, h))
        return np.column_stack([ext[0] / 2 + rad * np.cos(phi), ext[1] / 2 + rad * np.sin(phi), z])
    areas = np.array([ext[1] * ext[2], ext[0] * ext[2], ext[0] * ext[1]])
    face = rng.choice(6, size=n, p=np.repeat(areas, 2) / (2 * areas.sum()))
    pts = rng.uniform(0, 1, (n, 3)) * ext
    axis, side = face // 2, face % 2
    pts[np.arange(n), axis] = side * ext[axis]
    return pts


def _footprint(center_uv, yaw, ext) -> Polygon:
    c, s = math.cos(yaw), math.sin(yaw)
    hx, hy = ext[0] / 2, ext[1] / 2
    local = [(-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)]
    return Polygon([(center_uv[0] + c * x - s * y, center_uv[1] + s * x + c * y) for x, y in local])


def synth_scene(spec: SceneSpec, index: int = 0) -> Scene:
    """Deterministic random tabletop scene number ``index`` of ``spec``.

    Objects stand upright (object z against gravity) on the table plane with
    random yaw, non-overlapping footprints at least ``min_gap`` apart, and
    carry dense surface points so occlusion has something to remove.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), int(index)]))
    g = np.array(spec.gravity, dtype=float)
    g /= np.linalg.norm(g)
    up = -g
    h1, h2 = _horizontal_axes(g)
    shapes = sorted(spec.shape_weights)
    weights = np.array([spec.shape_weights[s] for s in shapes], dtype=float)
    weights /= weights.sum()
    count = int(rng.integers(spec.min_objects, spec.max_objects + 1))
    half_u, half_v = spec.region[0] / 2, spec.region[1] / 2
    cu, cv = spec.region_center
    bounds = shapely_box(cu - half_u, cv - half_v, cu + half_u, cv + half_v)

    placed: list[Polygon] = []
    objects = []
    for oid in range(count):
        shape = shapes[int(rng.choice(len(shapes), p=weights))]
        if shape == "box":
            ext = np.array([rng.uniform(*rng_) for rng_ in spec.box_extents])
        elif shape == "cylinder":
            r = rng.uniform(*spec.cylinder_radius)
            ext = np.array([2 * r, 2 * r, rng.uniform(*spec.cylinder_height)])
        else:
            r = rng.uniform(*spec.sphere_radius)
            ext = np.full(3, 2 * r)
        for _ in range(spec.max_attempts):
            uv = (rng.uniform(cu - half_u, cu + half_u), rng.uniform(cv - half_v, cv + half_v))
            yaw = rng.uniform(0.0, 2 * math.pi) if shape == "box" else 0.0
            poly = _footprint(uv, yaw, ext)
            if bounds.contains(poly) and all(poly.distance(p) >= spec.min_gap for p in placed):
                break
        else:
            raise PlacementError(
                f"could not place object {oid} ({shape}) after {spec.max_attempts} attempts"
            )
        placed.append(poly)
        c, s = math.cos(yaw), math.sin(yaw)
        rot = np.column_stack([c * h1 + s * h2, -s * h1 + c * h2, up])
        ground = spec.table_offset * g + uv[0] * h1 + uv[1] * h2
        origin = ground - rot[:, :2] @ (ext[:2] / 2)
        pose = RigidTransform(rot, origin)
        points = pose.apply(_surface_points(shape, ext, spec.points_per_object, rng))
        label = LABELS[shape][int(rng.integers(len(LABELS[shape])))]
        conf = float(rng.uniform(*spec.confidence_range))
        objects.append(ObbDetection(oid, label, ShapeClass(shape), conf, Obb(pose, ext), points))
    meta = {"seed": int(spec.seed), "index": int(index), "spec_digest": spec.digest()}
    return Scene(f"synth-{spec.seed}-{index:04d}", g, tuple(objects), meta)


def occlude(scene: Scene, fraction: float, seed: int = 0, object_ids: Iterable[int] | None = None) -> Scene:
    """Drop ``fraction`` of each chosen object's points beyond a random plane.

    The plane normal is drawn per object; the points with the largest
    projection onto it are removed. Boxes, labels, and confidences are
    carried over untouched.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    chosen = None if object_ids is None else set(object_ids)
    out = []
    for o in scene.objects:
        if o.points is None or (chosen is not None and o.id not in chosen) or fraction == 0.0:
            out.append(o)
            continue
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(o.id)]))
        normal = rng.normal(size=3)
        normal /= np.linalg.norm(normal)
        drop = int(round(fraction * len(o.points)))
        order = np.argsort(o.points @ normal, kind="stable")
        keep = np.sort(order[: len(o.points) - drop])
        out.append(replace(o, points=o.points[keep]))
    meta = dict(scene.meta)
    if fraction > 0.0:
        meta["occlusion"] = float(fraction)
    return Scene(scene.scene_id, scene.gravity, tuple(out), meta)


# ---------------------------------------------------------------- oracles


@dataclass(frozen=True)
class FeasibilityVerdict:
    feasible: bool
    reasons: tuple[str, ...] = ()


def _segment_box_distance(a, b, obb: Obb) -> float:
    """Exact distance between segment [a, b] and the solid box.

    The squared distance is convex and piecewise quadratic in the segment
    parameter, with breaks where a coordinate crosses a box face, so the
    minimum is at a break point or at a piece's stationary point.
    """
    la, lb = obb.to_local(np.array([a, b], dtype=float))
    ext = obb.extents
    d = lb - la

    def dist(s: float) -> float:
        p = la + s * d
        return math.sqrt(float(np.sum(np.maximum(np.maximum(-p, p - ext), 0.0) ** 2)))

    breaks = {0.0, 1.0}
    for i in range(3):
        if d[i] != 0.0:
            for bound in (0.0, ext[i]):
                s = (bound - la[i]) / d[i]
                if 0.0 < s < 1.0:
                    breaks.add(float(s))
    knots = sorted(breaks)
    cands = list(knots)
    for lo, hi in zip(knots[:-1], knots[1:]):
        mid = la + 0.5 * (lo + hi) * d
        below, above = mid < 0.0, mid > ext
        num = den = 0.0
        for i in range(3):
            if below[i] or above[i]:
                ref = 0.0 if below[i] else ext[i]
                num += (la[i] - ref) * d[i]
                den += d[i] * d[i]
        if den > 0.0:
            cands.append(min(max(-num / den, lo), hi))
    return min(dist(s) for s in cands)


def _segment_hits_box(a, b, obb: Obb, tol: float = 1e-9) -> bool:
    la, lb = obb.to_local(np.array([a, b]))
    d = lb - la
    lo, hi = 0.0, 1.0
    for i in range(3):
        if abs(d[i]) < 1e-15:
            if la[i] < -tol or la[i] > obb.extents[i] + tol:
                return False
            continue
        t1 = (-tol - la[i]) / d[i]
        t2 = (obb.extents[i] + tol - la[i]) / d[i]
        lo, hi = max(lo, min(t1, t2)), min(hi, max(t1, t2))
        if lo > hi:
            return False
    return True


def _obbs_overlap(c1, a1, h1, c2, a2, h2, tol: float = 1e-9) -> bool:
    """Separating-axis test between two oriented boxes (centre, axes, half sizes)."""
    t = c2 - c1
    axes = [a1[:, i] for i in range(3)] + [a2[:, i] for i in range(3)]
    for i in range(3):
        for j in range(3):
            cr = cross3(a1[:, i], a2[:, j])
            n = np.linalg.norm(cr)
            if n > 1e-9:
                axes.append(cr / n)
    for ax in axes:
        r1 = np.sum(h1 * np.abs(a1.T @ ax))
        r2 = np.sum(h2 * np.abs(a2.T @ ax))
        if abs(t @ ax) > r1 + r2 - tol:
            return False
    return True


def feasibility_oracle(
    grasp: ScoredGrasp,
    target: Obb,
    others: Sequence[Obb],
    gravity,
    *,
    w_max: float = 0.085,
    th0: float = 1.05,
    finger_thickness: float = 0.01,
    clearance: float = 0.001,
    table_level: float | None = None,
) -> FeasibilityVerdict:
    """Analytic stand-in for a human success judgement.

    Checks, each reported independently:
      jaw_span     w < w_max and both finger segments keep ``clearance``
                   from every other box
      containment  the closing segment meets the target box
      approach     the corridor swept behind the gripper (w wide,
                   ``finger_thickness`` thick, d long) stays off the table
                   (touching counts) and out of other boxes
      orientation  approach axis within the gravity cone
    The table plane defaults to the target's lowest corner.
    """
    g = np.asarray(gravity, dtype=float)
    r, t = grasp.rotation, grasp.translation
    x, y, z = r[:, 0], r[:, 1], r[:, 2]
    w, d = grasp.width, grasp.depth
    reasons = []

    ok = w < w_max
    for sign in (-1.0, 1.0):
        base = t + sign * (w / 2) * y
        for o in others:
            if _segment_box_distance(base, base + d * x, o) < clearance:
                ok = False
    if not ok:
        reasons.append("jaw_span")

    if not _segment_hits_box(t - (w / 2) * y, t + (w / 2) * y, target):
        reasons.append("containment")

    level = table_level if table_level is not None else float(np.max(obb_corners(target) @ g))
    centre = t - (d / 2) * x
    half = np.array([d / 2, w / 2, finger_thickness / 2])
    corners = centre + (np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]) * half) @ r.T
    blocked = float(np.max(corners @ g)) >= level - 1e-9
    for o in others:
        if _obbs_overlap(centre, r, half, o.center, o.pose.rotation, o.extents / 2):
            blocked = True
    if blocked:
        reasons.append("approach")

    if not 1.0 - float(x @ g) / (np.linalg.norm(x) * np.linalg.norm(g)) < th0:
        reasons.append("orientation")
    return FeasibilityVerdict(not reasons, tuple(reasons))


def brute_force_best_M(
    obb: Obb,
    grid_resolution: int = 21,
    params: StabilityParams | None = None,
    region: str = "volume",
    face: tuple[int, int] | None = None,
) -> tuple[float, np.ndarray]:
    """Grid search for the stability maximum, taking the gripper plane through the COG.

    ``region`` is "volume" (grid filling the box) or "surface" (all six face
    grids); ``face=(axis, side)`` restricts to one face, e.g. (1, 0) for the
    y=0 face. Returns (max M, argmax in the camera frame).
    """
    if grid_resolution < 9:
        raise ValueError("grid_resolution must be >= 9")
    params = params or StabilityParams()
    ext = obb.extents
    axes = [np.linspace(0.0, e, grid_resolution) for e in ext]
    if region == "volume" and face is None:
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    else:
        faces = [face] if face is not None else [(a, s) for a in range(3) for s in (0, 1)]
        parts = []
        for axis, side in faces:
            ax = list(axes)
            ax[axis] = np.array([side * ext[axis]])
            parts.append(np.stack(np.meshgrid(*ax, indexing="ij"), axis=-1).reshape(-1, 3))
        grid = np.vstack(parts)
    d2 = np.linalg.norm(grid - ext / 2, axis=1)
    half = obb.diag / 2
    m = params.alpha + (1 - params.alpha) * (1 - d2 / half)
    i = int(np.argmax(m))
    return float(m[i]), obb.pose.apply(grid[i])


# ---------------------------------------------------------------- benchmark


@dataclass(frozen=True)
class ScenarioStats:
    scenario: str
    n_scenes: int
    n_objects: int
    n: int
    mean: float
    quantiles: tuple[float, ...]


@dataclass(frozen=True)
class BenchReport:
    scenarios: dict
    mean: float
    mean_of_scenarios: float
    n_scenes: int
    skipped: int
    infeasible_reasons: dict
    config_digest: str
    seed: int
    scene_ids: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "scene_ids": sorted(set(self.scene_ids)),
            "mean": self.mean,
            "mean_of_scenarios": self.mean_of_scenarios,
            "n_scenes": self.n_scenes,
            "skipped": self.skipped,
            "infeasible_reasons": dict(sorted(self.infeasible_reasons.items())),
            "config_digest": self.config_digest,
            "seed": self.seed,
            "scenarios": {
                name: {
                    "n_scenes": s.n_scenes,
                    "n_objects": s.n_objects,
                    "n": s.n,
                    "mean": s.mean,
                    "quantiles": dict(zip([f"q{int(q * 100):02d}" for q in QUANTILES], s.quantiles)),
                }
                for name, s in sorted(self.scenarios.items())
            },
        }

    def write(self, json_path, csv_path=None):
        json_path = Path(json_path)
        json_path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        csv_path = Path(csv_path) if csv_path else json_path.with_suffix(".csv")
        with csv_path.open("w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["scenario", "q05", "q25", "q50", "q75", "q95", "mean", "n"])
            for name, s in sorted(self.scenarios.items()):
                wr.writerow([name, *(repr(q) for q in s.quantiles), repr(s.mean), s.n])
        return json_path, csv_path


def scenario_of(scene: Scene) -> str:
    if scene.meta.get("occlusion", 0) > 0:
        return "occluded"
    return "single" if len(scene.objects) == 1 else "multi"


def select_objects(scene: Scene, limit: int = 3) -> list[ObbDetection]:
    supported = [o for o in scene.objects if o.shape_class in (ShapeClass.BOX, ShapeClass.SPHERE, ShapeClass.CYLINDER)]
    return sorted(supported, key=lambda o: (-o.confidence, o.id))[:limit]


def evaluate_scene(scene: Scene, config: RunConfig, top: int = 5, max_objects: int = 3, **oracle_kw):
    """Per-grasp beta*M values for the selected objects; missing grasps count 0."""
    gs = generate_scene_grasps(
        scene, config.gripper, config.thresholds, config.stability, k=top, seed=config.seed
    )
    values, reasons, n_obj = [], {}, 0
    for obj in select_objects(scene, max_objects):
        n_obj += 1
        others = [o.obb for o in scene.objects if o.id != obj.id]
        grasps = gs.for_object(obj.id).grasps[:top]
        for g in grasps:
            verdict = feasibility_oracle(
                g, obj.obb, others, scene.gravity, w_max=config.gripper.w_max, th0=config.thresholds.th0, **oracle_kw
            )
            for why in verdict.reasons:
                reasons[why] = reasons.get(why, 0) + 1
            values.append(g.stability if verdict.feasible else 0.0)
        values.extend([0.0] * (top - len(grasps)))
    return values, reasons, n_obj


def bench(scenes: Iterable[Scene], config: RunConfig | None = None, skipped: int = 0, **kw) -> BenchReport:
    config = config or RunConfig()
    pooled: dict[str, list[float]] = {}
    counts: dict[str, list[int]] = {}
    reasons: dict[str, int] = {}
    n_scenes = 0
    ids = []
    for scene in scenes:
        n_scenes += 1
        ids.append(scene.scene_id)
        vals, why, n_obj = evaluate_scene(scene, config, **kw)
        name = scenario_of(scene)
        pooled.setdefault(name, []).extend(vals)
        c = counts.setdefault(name, [0, 0])
        c[0] += 1
        c[1] += n_obj
        for k, v in why.items():
            reasons[k] = reasons.get(k, 0) + v

    stats = {}
    for name, vals in pooled.items():
        arr = np.sort(np.array(vals))
        mean = math.fsum(arr) / len(arr) if len(arr) else 0.0
        qs = tuple(float(q) for q in np.quantile(arr, QUANTILES)) if len(arr) else (0.0,) * len(QUANTILES)
        stats[name] = ScenarioStats(name, counts[name][0], counts[name][1], len(arr), mean, qs)
    all_vals = [v for vals in pooled.values() for v in vals]
    mean = math.fsum(sorted(all_vals)) / len(all_vals) if all_vals else 0.0
    mos = math.fsum(sorted(s.mean for s in stats.values())) / len(stats) if stats else 0.0
    return BenchReport(stats, mean, mos, n_scenes, skipped, reasons, config.digest(), config.seed, tuple(ids))


def desk_scenes(n_scenes: int = 100, n_occluded: int = 30, spec: SceneSpec | None = None, fraction: float = 0.5) -> list[Scene]:
    """``n_scenes - n_occluded`` fresh scenes plus occluded copies of the first ``n_occluded``."""
    spec = spec or SceneSpec()
    base = [synth_scene(spec, i) for i in range(n_scenes - n_occluded)]
    occluded = [occlude(base[i % len(base)], fraction, seed=spec.seed + i) for i in range(n_occluded)]
    return base + occluded
