"""Ensemble-size ablation on the stochastic-delay benchmark.

Trains the largest B once per seed; smaller ensembles are member prefixes.

    python scripts/ablation_b.py --b 1,5,10,20,50,100 --seeds 10
"""

import argparse
import time

import numpy as np

from tsmb.benchmarks import StochasticBenchmark, common_rows, config_for
from tsmb.dataset import split
from tsmb.ensemble import tsmb_predict, tsmb_train
from tsmb.evaluation import coverage, r_squared


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--b", default="1,5,10,20,50,100")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--learner", choices=("linear", "gbdt"), default="linear")
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()
    b_list = [int(v) for v in args.b.split(",")]
    if len(set(b_list)) != len(b_list) or min(b_list) < 1:
        p.error("B values must be distinct positive integers")

    bench = StochasticBenchmark()
    r2 = {b: [] for b in b_list}
    cov = {b: [] for b in b_list}
    t0 = time.perf_counter()
    for seed in range(args.seeds):
        train, _, test = split(bench.dataset(seed), bench.split)
        box = bench.box()
        model = tsmb_train(train, config_for(box, seed, B=max(b_list), learner=args.learner), workers=args.workers)
        rows = common_rows(test, box)
        y = test.target[:rows]
        for b in b_list:
            dist = tsmb_predict(model.prefix(b), test, n_rows=rows)
            r2[b].append(r_squared(dist.mean, y))
            cov[b].append(coverage(*dist.interval(args.alpha), y))
    print(f"{'B':>5}{'mean R2':>10}{'sd':>8}{f'cov@{args.alpha}':>12}")
    for b in b_list:
        print(f"{b:>5}{np.mean(r2[b]):>10.4f}{np.std(r2[b], ddof=1) if args.seeds > 1 else 0.0:>8.4f}"
              f"{np.mean(cov[b]):>12.3f}")
    print(f"elapsed {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
