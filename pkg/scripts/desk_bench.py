"""Desk-scale benchmark: synthetic scenes, analytic feasibility, top-5 stability.

    python3 scripts/desk_bench.py --out results/desk
"""

import argparse
import json
import time
from pathlib import Path

from obbgrasp.config import load_config
from obbgrasp.harness import SceneSpec, bench, desk_scenes


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="RunConfig JSON (defaults if omitted)")
    ap.add_argument("--spec", help="SceneSpec JSON (desk defaults if omitted)")
    ap.add_argument("--scenes", type=int, default=100)
    ap.add_argument("--occluded", type=int, default=30)
    ap.add_argument("--fraction", type=float, default=0.5)
    ap.add_argument("--out", default="results/desk")
    args = ap.parse_args()

    config = load_config(args.config)
    spec = SceneSpec.from_dict(json.loads(Path(args.spec).read_text())) if args.spec else SceneSpec()
    t0 = time.perf_counter()
    scenes = desk_scenes(args.scenes, args.occluded, spec, args.fraction)
    report = bench(scenes, config)
    elapsed = time.perf_counter() - t0

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    report.write(out.with_suffix(".json"), out.with_suffix(".csv"))
    unocc = [s for n, s in report.scenarios.items() if n != "occluded"]
    unocc_mean = sum(s.mean * s.n for s in unocc) / max(1, sum(s.n for s in unocc))
    print(f"scenes={report.n_scenes} mean={report.mean:.4f} seconds={elapsed:.1f}")
    for name, s in sorted(report.scenarios.items()):
        print(f"  {name:9s} n={s.n:4d} mean={s.mean:.4f} median={s.quantiles[2]:.4f}")
    if "occluded" in report.scenarios:
        gap = report.scenarios["occluded"].mean - unocc_mean
        print(f"  occluded - unoccluded = {gap:+.4f}")
    print(f"  infeasible: {report.infeasible_reasons}")


if __name__ == "__main__":
    main()
