"""Stochastic-delay benchmark: mean test R^2 per method over seeds.

    python scripts/benchmark_stochastic.py --seeds 10 --b 20
    python scripts/benchmark_stochastic.py --smoothness 3 --noise 1.0 --spread 6
"""

import argparse
import json
import time

import numpy as np

from tsmb.benchmarks import METHODS, StochasticBenchmark, config_for, evaluate_methods, train_methods
from tsmb.dataset import SplitSpec, split


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--first-seed", type=int, default=0)
    p.add_argument("--b", type=int, default=20)
    p.add_argument("--learner", choices=("linear", "gbdt"), default="linear")
    p.add_argument("--score", choices=("gcc", "tdmi"), default="gcc")
    p.add_argument("--methods", default="tsmb,tde-point,no-alignment")
    p.add_argument("--smoothness", type=float, default=StochasticBenchmark.smoothness)
    p.add_argument("--noise", type=float, default=StochasticBenchmark.noise_sd)
    p.add_argument("--spread", type=int, default=StochasticBenchmark.spread)
    p.add_argument("--train-fraction", type=float, default=0.5)
    p.add_argument("--budget", type=int, default=StochasticBenchmark.budget)
    p.add_argument("--json", action="store_true", help="print per-seed rows as JSON lines")
    args = p.parse_args()

    methods = tuple(m for m in args.methods.split(",") if m)
    unknown = set(methods) - set(METHODS)
    if unknown:
        p.error(f"unknown methods {sorted(unknown)}")
    fr = args.train_fraction
    bench = StochasticBenchmark(noise_sd=args.noise, smoothness=args.smoothness, spread=args.spread,
                                budget=args.budget, split=SplitSpec(fr, 0.25, 0.75 - fr))
    rows = []
    t0 = time.perf_counter()
    for seed in range(args.first_seed, args.first_seed + args.seeds):
        train, _, test = split(bench.dataset(seed), bench.split)
        box = bench.box()
        cfg = config_for(box, seed, B=args.b, learner=args.learner, score=args.score)
        res = evaluate_methods(train_methods(train, cfg, methods), test, box)
        rows.append(res)
        if args.json:
            print(json.dumps(dict(res, seed=seed), sort_keys=True), flush=True)
    table = {m: np.array([r[m] for r in rows]) for m in methods}
    print(f"{'method':<14}{'mean R2':>10}{'sd':>8}")
    for m, v in table.items():
        print(f"{m:<14}{v.mean():>10.4f}{v.std(ddof=1) if v.size > 1 else 0.0:>8.4f}")
    if "tsmb" in table and "tde-point" in table:
        d = table["tsmb"] - table["tde-point"]
        print(f"tsmb - tde: {d.mean():+.4f} (se {d.std(ddof=1) / np.sqrt(d.size) if d.size > 1 else 0.0:.4f}, "
              f"wins {int((d > 0).sum())}/{d.size})")
    print(f"elapsed {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
