"""Command-line front end: generate, synth, bench, export-ply.

Exit codes: 0 success, 1 input error, 2 partial result with warnings.
Timings go to stderr as ``key=value`` lines.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from obbgrasp.config import load_config
from obbgrasp.errors import GraspError, PlacementError, SceneFormatError
from obbgrasp.harness import SceneSpec, bench, occlude, synth_scene
from obbgrasp.io import export_ply, load_grasps, load_scene, read_json, save_grasps, save_scene
from obbgrasp.pipeline import GraspSet, generate_scene_grasps, precompute, query, query_on_demand
from obbgrasp.strategies import ShapeClass

EXIT_OK, EXIT_INPUT, EXIT_PARTIAL = 0, 1, 2
SUPPORTED = {ShapeClass.BOX, ShapeClass.SPHERE, ShapeClass.CYLINDER}

log = logging.getLogger("obbgrasp")


def _timing(**fields):
    print(" ".join(f"{k}={v}" for k, v in fields.items()), file=sys.stderr, flush=True)


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_INPUT


def cmd_generate(args) -> int:
    try:
        scene = load_scene(args.scene)
        config = load_config(args.config).with_overrides(seed=args.seed, top_k=args.top_k, mode=args.mode)
    except (GraspError, ValueError, OSError) as exc:
        return _fail(str(exc))

    digest = config.digest()
    kw = dict(k=config.top_k, seed=config.seed)
    parts = (config.gripper, config.thresholds, config.stability)

    if not args.label:
        t0 = time.perf_counter()
        grasp_set = generate_scene_grasps(scene, *parts, config_digest=digest, **kw)
        _timing(phase="generate", scene_id=scene.scene_id, seconds=f"{time.perf_counter() - t0:.6f}")
    else:
        entries, seen = [], set()
        if config.mode == 1:
            t0 = time.perf_counter()
            index = precompute(scene, *parts, **kw)
            _timing(phase="precompute", scene_id=scene.scene_id, seconds=f"{time.perf_counter() - t0:.6f}")
        for label in args.label:
            t0 = time.perf_counter()
            if config.mode == 1:
                hits = query(index, label, scene.scene_id)
                phase = "query"
            else:
                hits = query_on_demand(scene, label, *parts, **kw)
                phase = "on_demand"
            _timing(phase=phase, label=repr(label), seconds=f"{time.perf_counter() - t0:.6f}")
            if not hits:
                print(f"notice: label {label!r} not found in scene {scene.scene_id}", file=sys.stderr)
            for e in hits:
                if e.object_id not in seen:
                    seen.add(e.object_id)
                    entries.append(e)
        grasp_set = GraspSet(scene.scene_id, tuple(entries), digest, config.seed)

    try:
        save_grasps(grasp_set, args.out)
    except OSError as exc:
        return _fail(str(exc))
    for w in grasp_set.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if scene.objects and all(o.shape_class not in SUPPORTED for o in scene.objects):
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.n < 1:
        return _fail(f"--n must be >= 1, got {args.n}")
    try:
        spec = SceneSpec() if args.spec is None else SceneSpec.from_dict(read_json(args.spec))
        if args.seed is not None:
            spec = SceneSpec.from_dict({**spec.to_dict(), "seed": args.seed})
        if args.occlude is not None and not 0.0 <= args.occlude <= 1.0:
            raise ValueError(f"--occlude must lie in [0, 1], got {args.occlude}")
        scenes = [synth_scene(spec, i) for i in range(args.n)]
    except (GraspError, ValueError, TypeError, OSError) as exc:
        return _fail(str(exc))
    except PlacementError as exc:
        return _fail(f"placement failed: {exc}")

    out = Path(args.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for i, scene in enumerate(scenes):
            save_scene(scene, out / f"{scene.scene_id}.json")
            if args.occlude is not None:
                save_scene(occlude(scene, args.occlude, seed=spec.seed + i), out / f"{scene.scene_id}_occluded.json")
    except OSError as exc:
        return _fail(str(exc))
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        config = load_config(args.config)
    except (GraspError, ValueError, OSError) as exc:
        return _fail(str(exc))
    root = Path(args.scenes)
    if not root.is_dir():
        return _fail(f"{root}: not a directory")
    files = sorted(root.glob("*.json"))
    if not files:
        return _fail(f"{root}: no scene files")

    scenes, skipped = [], 0
    for f in files:
        try:
            scenes.append(load_scene(f))
        except SceneFormatError as exc:
            skipped += 1
            log.warning("skipping %s", exc)
    if not scenes:
        return _fail(f"{root}: no readable scenes ({skipped} skipped)")

    t0 = time.perf_counter()
    report = bench(scenes, config, skipped=skipped)
    _timing(phase="bench", n_scenes=report.n_scenes, skipped=skipped, seconds=f"{time.perf_counter() - t0:.6f}")
    try:
        json_path, csv_path = report.write(args.out)
    except OSError as exc:
        return _fail(str(exc))
    print(f"mean={report.mean:.6f} json={json_path} csv={csv_path}")
    return EXIT_PARTIAL if skipped else EXIT_OK


def cmd_export_ply(args) -> int:
    try:
        scene = load_scene(args.scene)
        grasp_set = load_grasps(args.grasps)
    except (GraspError, ValueError, OSError) as exc:
        return _fail(str(exc))
    if grasp_set.scene_id != scene.scene_id:
        return _fail(f"scene_id mismatch: scene {scene.scene_id!r}, grasps {grasp_set.scene_id!r}")
    try:
        export_ply(scene, grasp_set, args.out)
    except OSError as exc:
        return _fail(str(exc))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="obbgrasp", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log info messages")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="grasps for a scene file")
    g.add_argument("--scene", required=True)
    g.add_argument("--config")
    g.add_argument("--out", required=True)
    g.add_argument("--label", action="append", help="target label; repeat for several queries")
    g.add_argument("--mode", type=int, choices=(1, 2))
    g.add_argument("--seed", type=int)
    g.add_argument("--top-k", type=int, dest="top_k")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("synth", help="write synthetic scenes")
    s.add_argument("--spec")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--occlude", type=float)
    s.add_argument("--out-dir", required=True, dest="out_dir")
    s.set_defaults(func=cmd_synth)

    b = sub.add_parser("bench", help="benchmark a directory of scenes")
    b.add_argument("--scenes", required=True)
    b.add_argument("--config")
    b.add_argument("--out", required=True, help="report JSON; the CSV is written next to it")
    b.set_defaults(func=cmd_bench)

    e = sub.add_parser("export-ply", help="wireframe PLY of boxes and grasps")
    e.add_argument("--scene", required=True)
    e.add_argument("--grasps", required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_export_ply)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
