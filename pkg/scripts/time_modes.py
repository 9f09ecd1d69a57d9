"""Precompute-then-query versus on-demand generation timings on synthetic scenes."""

import argparse
import statistics
import time

from obbgrasp.config import RunConfig
from obbgrasp.harness import SceneSpec, synth_scene
from obbgrasp.pipeline import precompute, query, query_on_demand


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenes", type=int, default=20)
    ap.add_argument("--objects", type=int, default=4)
    args = ap.parse_args()

    cfg = RunConfig()
    parts = (cfg.gripper, cfg.thresholds, cfg.stability)
    spec = SceneSpec(min_objects=args.objects, max_objects=args.objects, seed=11)
    pre, first, repeat, demand = [], [], [], []
    for i in range(args.scenes):
        scene = synth_scene(spec, i)
        label = scene.objects[0].label
        t = time.perf_counter()
        index = precompute(scene, *parts, k=cfg.top_k, seed=cfg.seed)
        pre.append(time.perf_counter() - t)
        for bucket in (first, repeat):
            t = time.perf_counter()
            query(index, label)
            bucket.append(time.perf_counter() - t)
        t = time.perf_counter()
        query_on_demand(scene, label, *parts, k=cfg.top_k, seed=cfg.seed)
        demand.append(time.perf_counter() - t)

    def ms(xs):
        return f"median={1e3 * statistics.median(xs):.3f}ms max={1e3 * max(xs):.3f}ms"

    print(f"mode 1 precompute     {ms(pre)}")
    print(f"mode 1 first query    {ms(first)}")
    print(f"mode 1 repeat query   {ms(repeat)}")
    print(f"mode 2 single target  {ms(demand)}")


if __name__ == "__main__":
    main()
