"""How many assignment/power rounds the proposed scheme needs.

    python3 scripts/kappa_stats.py --seeds 1000 --cnr 5 10 20
"""

import argparse
from collections import Counter

import numpy as np

from relay_ee import InfeasibleBudget, SystemConfig, draw_channels, optimize


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=1000)
    ap.add_argument("--cnr", type=float, nargs="+", default=[10.0])
    ap.add_argument("--N", type=int, default=8)
    ap.add_argument("--K", type=int, default=2)
    ap.add_argument("--L", type=int, default=4)
    args = ap.parse_args()

    base = SystemConfig(num_subcarriers=args.N, num_users=args.K, num_relays=args.L)
    for cnr in args.cnr:
        kappa, endings, infeasible = [], Counter(), 0
        for seed in range(args.seeds):
            cfg = base.replace(avg_cnr_db=cnr, seed=seed)
            try:
                r = optimize(cfg, draw_channels(cfg))
            except InfeasibleBudget:
                infeasible += 1
                continue
            kappa.append(r.iterations)
            endings[r.termination] += 1
        kappa = np.array(kappa)
        hist = {int(k): int(c) for k, c in zip(*np.unique(kappa, return_counts=True))}
        print(f"{cnr:g} dB: kappa histogram {hist}, kappa<=2 {np.mean(kappa <= 2):.3f}, "
              f"endings {dict(endings)}, infeasible {infeasible}")


if __name__ == "__main__":
    main()
