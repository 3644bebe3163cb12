"""Gap between the proposed scheme and the exhaustive oracle on the small scenario.

    python3 scripts/oracle_gap.py --seeds 100
"""

import argparse
import time

import numpy as np

from relay_ee import InfeasibleBudget, SystemConfig, draw_channels, optimize, oracle


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--cnr", type=float, nargs="+", default=[5.0, 10.0, 15.0])
    ap.add_argument("--xi", type=float, nargs="+", default=[0.0, 0.01])
    args = ap.parse_args()

    base = SystemConfig(num_subcarriers=4, num_users=2, num_relays=5)
    print("cnr_db,xi,seeds_ok,mean_gap,max_gap,oracle_ee,proposed_ee,seconds")
    for cnr in args.cnr:
        for xi in args.xi:
            t0 = time.perf_counter()
            gaps, best, ours = [], [], []
            for seed in range(args.seeds):
                cfg = base.replace(avg_cnr_db=cnr, xi=xi, seed=seed)
                ch = draw_channels(cfg)
                try:
                    o, p = oracle(cfg, ch).ee, optimize(cfg, ch).ee
                except InfeasibleBudget:
                    continue
                gaps.append((o - p) / o)
                best.append(o)
                ours.append(p)
            dt = time.perf_counter() - t0
            print(f"{cnr},{xi},{len(gaps)},{np.mean(gaps)!r},{np.max(gaps)!r},{np.mean(best)!r},{np.mean(ours)!r},{dt:.2f}")


if __name__ == "__main__":
    main()
