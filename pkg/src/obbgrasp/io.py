"""Scene / grasp JSON files and ASCII PLY export."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from obbgrasp.errors import DuplicateIdError, GraspError, SceneFormatError
from obbgrasp.geometry import Obb, RigidTransform, obb_corners
from obbgrasp.pipeline import GraspSet, ObbDetection, ObjectGrasps, Scene
from obbgrasp.scoring import ScoredGrasp
from obbgrasp.strategies import GraspCandidate, ShapeClass

PLY_STEM_LENGTH = 0.03


def _dump(data: dict, path: Path, indent: int | None = None):
    text = json.dumps(data, indent=indent, ensure_ascii=False, allow_nan=False)
    try:
        path.write_text(text + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SceneFormatError(f"{path}: cannot read: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneFormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _reals(value, n: int, where: str) -> list[float]:
    if not isinstance(value, list) or len(value) != n:
        raise SceneFormatError(f"{where}: expected a list of {n} numbers")
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise SceneFormatError(f"{where}[{i}]: expected a finite number, got {v!r}")
        out.append(float(v))
    return out


def _field(obj: dict, key: str, where: str):
    if key not in obj:
        raise SceneFormatError(f"{where}.{key}: missing required field")
    return obj[key]


# ---------------------------------------------------------------- scenes


def scene_from_dict(data, source: str = "<scene>") -> Scene:
    if not isinstance(data, dict):
        raise SceneFormatError(f"{source}: top level must be an object")
    scene_id = _field(data, "scene_id", source)
    if not isinstance(scene_id, str):
        raise SceneFormatError(f"{source}.scene_id: expected a string")
    gravity = _reals(_field(data, "gravity", source), 3, f"{source}.gravity")
    if abs(math.sqrt(sum(v * v for v in gravity)) - 1.0) > 1e-9:
        raise SceneFormatError(f"{source}.gravity: must be unit length")
    raw_objects = _field(data, "objects", source)
    if not isinstance(raw_objects, list):
        raise SceneFormatError(f"{source}.objects: expected a list")

    objects, seen = [], set()
    for i, o in enumerate(raw_objects):
        where = f"{source}.objects[{i}]"
        if not isinstance(o, dict):
            raise SceneFormatError(f"{where}: expected an object")
        oid = _field(o, "id", where)
        if isinstance(oid, bool) or not isinstance(oid, int):
            raise SceneFormatError(f"{where}.id: expected an integer")
        if oid in seen:
            raise DuplicateIdError(f"{where}.id: duplicate object id {oid}")
        seen.add(oid)
        label = _field(o, "label", where)
        if not isinstance(label, str):
            raise SceneFormatError(f"{where}.label: expected a string")
        try:
            shape = ShapeClass(_field(o, "shape_class", where))
        except ValueError:
            raise SceneFormatError(
                f"{where}.shape_class: unknown class {o['shape_class']!r}"
            ) from None
        conf = _field(o, "confidence", where)
        if isinstance(conf, bool) or not isinstance(conf, (int, float)) or not 0.0 <= conf <= 1.0:
            raise SceneFormatError(f"{where}.confidence: {conf!r} not in [0, 1]")
        pose = _field(o, "pose", where)
        if not isinstance(pose, dict):
            raise SceneFormatError(f"{where}.pose: expected an object")
        rot = _reals(_field(pose, "rotation", f"{where}.pose"), 9, f"{where}.pose.rotation")
        trans = _reals(_field(pose, "translation", f"{where}.pose"), 3, f"{where}.pose.translation")
        extents = _reals(_field(o, "extents", where), 3, f"{where}.extents")
        try:
            obb = Obb(RigidTransform(np.array(rot).reshape(3, 3), trans), extents)
        except GraspError as exc:
            raise SceneFormatError(f"{where}: {exc}") from exc
        points = None
        if o.get("points") is not None:
            raw = o["points"]
            if not isinstance(raw, list):
                raise SceneFormatError(f"{where}.points: expected a list of 3-vectors")
            points = np.array([_reals(p, 3, f"{where}.points[{j}]") for j, p in enumerate(raw)]).reshape(-1, 3)
        objects.append(ObbDetection(oid, label, shape, float(conf), obb, points))
    meta = data.get("meta", {})
    if not isinstance(meta, dict):
        raise SceneFormatError(f"{source}.meta: expected an object")
    return Scene(scene_id, gravity, tuple(objects), meta)


def scene_to_dict(scene: Scene) -> dict:
    objs = []
    for o in scene.objects:
        d = {
            "id": int(o.id),
            "label": o.label,
            "shape_class": o.shape_class.value,
            "confidence": float(o.confidence),
            "pose": {
                "rotation": [float(v) for v in o.obb.pose.rotation.reshape(-1)],
                "translation": [float(v) for v in o.obb.pose.translation],
            },
            "extents": [float(v) for v in o.obb.extents],
        }
        if o.points is not None:
            d["points"] = o.points.tolist()
        objs.append(d)
    out = {"scene_id": scene.scene_id, "gravity": [float(v) for v in scene.gravity], "objects": objs}
    if scene.meta:
        out["meta"] = dict(scene.meta)
    return out


def load_scene(path) -> Scene:
    return scene_from_dict(read_json(path), str(path))


def save_scene(scene: Scene, path):
    _dump(scene_to_dict(scene), Path(path))


# ---------------------------------------------------------------- grasps


def grasp_record(entry: ObjectGrasps, g: ScoredGrasp) -> dict:
    return {
        "object_id": int(entry.object_id),
        "label": entry.label,
        "rotation": [float(v) for v in g.rotation.reshape(-1)],
        "translation": [float(v) for v in g.translation],
        "width": float(g.width),
        "depth": float(g.depth),
        "stability": float(g.stability),
        "confidence": float(g.confidence),
        "score": float(g.score),
        "d1": float(g.d1),
        "d2": float(g.d2),
    }


def grasps_to_dict(grasp_set: GraspSet) -> dict:
    return {
        "scene_id": grasp_set.scene_id,
        "config_digest": grasp_set.config_digest,
        "seed": grasp_set.seed,
        "objects": [
            {"object_id": int(e.object_id), "label": e.label, "count": len(e.grasps), "warning": e.warning}
            for e in grasp_set.objects
        ],
        "grasps": [grasp_record(e, g) for e in grasp_set.objects for g in e.grasps],
    }


def grasps_from_dict(data, source: str = "<grasps>") -> GraspSet:
    if not isinstance(data, dict):
        raise SceneFormatError(f"{source}: top level must be an object")
    scene_id = _field(data, "scene_id", source)
    records = _field(data, "grasps", source)
    if not isinstance(records, list):
        raise SceneFormatError(f"{source}.grasps: expected a list")

    by_object: dict[int, list[ScoredGrasp]] = {}
    labels: dict[int, str] = {}
    for i, r in enumerate(records):
        where = f"{source}.grasps[{i}]"
        oid = int(_field(r, "object_id", where))
        rot = np.array(_reals(_field(r, "rotation", where), 9, f"{where}.rotation")).reshape(3, 3)
        trans = np.array(_reals(_field(r, "translation", where), 3, f"{where}.translation"))
        nums = {k: float(_field(r, k, where)) for k in ("width", "depth", "stability", "confidence", "score", "d1", "d2")}
        cand = GraspCandidate(rot, trans, nums["width"], nums["depth"])
        by_object.setdefault(oid, []).append(
            ScoredGrasp(cand, nums["stability"], nums["confidence"], nums["score"], nums["d1"], nums["d2"])
        )
        labels.setdefault(oid, str(_field(r, "label", where)))

    summary = data.get("objects")
    if summary is None:
        summary = [{"object_id": oid, "label": labels[oid], "warning": None} for oid in by_object]
    entries = tuple(
        ObjectGrasps(int(s["object_id"]), s["label"], tuple(by_object.get(int(s["object_id"]), ())), s.get("warning"))
        for s in summary
    )
    return GraspSet(scene_id, entries, data.get("config_digest", ""), data.get("seed"))


def save_grasps(grasp_set: GraspSet, path):
    _dump(grasps_to_dict(grasp_set), Path(path), indent=1)


def load_grasps(path) -> GraspSet:
    return grasps_from_dict(read_json(path), str(path))


# ---------------------------------------------------------------- PLY

_BOX_EDGES = [(a, b) for a in range(8) for b in range(a + 1, 8) if bin(a ^ b).count("1") == 1]


def gripper_marker(g: ScoredGrasp | GraspCandidate, stem: float = PLY_STEM_LENGTH):
    """Vertices and 5 segments sketching a parallel-jaw gripper.

    Finger bases sit at T +/- (w/2) Y, fingers run a length d along the
    approach axis X, the palm bar joins the bases through T, and a stem
    leaves T backwards along -X.
    """
    r, t = g.rotation, g.translation
    x, y = r[:, 0], r[:, 1]
    half = g.width / 2.0
    base_l, base_r = t - half * y, t + half * y
    verts = np.array([t, base_l, base_r, base_l + g.depth * x, base_r + g.depth * x, t - stem * x])
    edges = [(1, 3), (2, 4), (1, 0), (0, 2), (0, 5)]
    return verts, edges


def _score_colour(s: float) -> tuple[int, int, int]:
    s = min(max(s, 0.0), 1.0)
    return int(round(255 * (1 - s))), int(round(255 * s)), 0


def export_ply(scene: Scene, grasp_set: GraspSet, path):
    """Box wireframes (white) and gripper markers (red to green by score)."""
    verts: list[tuple] = []
    edges: list[tuple] = []
    for o in scene.objects:
        base = len(verts)
        verts.extend((*c, 255, 255, 255) for c in obb_corners(o.obb))
        edges.extend((base + a, base + b, 255, 255, 255) for a, b in _BOX_EDGES)
    for entry in grasp_set.objects:
        for g in entry.grasps:
            base = len(verts)
            col = _score_colour(g.score)
            v, e = gripper_marker(g)
            verts.extend((*p, *col) for p in v)
            edges.extend((base + a, base + b, *col) for a, b in e)

    lines = [
        "ply",
        "format ascii 1.0",
        f"comment scene_id {scene.scene_id}",
        f"comment seed {grasp_set.seed}",
        f"comment config_digest {grasp_set.config_digest}",
        f"element vertex {len(verts)}",
        "property double x",
        "property double y",
        "property double z",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
        f"element edge {len(edges)}",
        "property int vertex1",
        "property int vertex2",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
        "end_header",
    ]
    lines += [f"{float(x)!r} {float(y)!r} {float(z)!r} {r} {g} {b}" for x, y, z, r, g, b in verts]
    lines += [f"{a} {b} {r} {g} {bl}" for a, b, r, g, bl in edges]
    path = Path(path)
    try:
        path.write_text("\n".join(lines) + "\n", encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
