"""Monte-Carlo curves for the large scenario (N=50, L=20, K=10).

Writes one CSV per sweep into --outdir:

    cnr.csv        EE vs average CNR, xi = 0, all three schemes
    cnr_xi.csv     EE vs average CNR, xi = 0.01
    p_static.csv   EE vs static power
    xi.csv         EE vs rate-dependent circuit power
    p_max.csv      EE vs power budget

    python3 scripts/trend_sweeps.py --trials 1000 --jobs 4 --outdir results
"""

import argparse
import time
from pathlib import Path

from relay_ee import SystemConfig
from relay_ee.sweep import SweepSpec, monte_carlo, write_csv

LARGE = SystemConfig(num_subcarriers=50, num_users=10, num_relays=20, alpha=(1, 1, 2, 3, 4, 5, 5, 6, 6, 7))
CNR = (10.0, 15.0, 20.0, 25.0, 30.0)


def sweeps(trials):
    mid = LARGE.replace(avg_cnr_db=15.0)
    return {
        "cnr": SweepSpec("cnr_db", CNR, trials, ("proposed", "randr-opa", "beam-epa"), LARGE),
        "cnr_xi": SweepSpec("cnr_db", CNR, trials, ("proposed",), LARGE.replace(xi=0.01)),
        "p_static": SweepSpec("p_static", (0.0, 0.1, 0.2, 0.3, 0.4), trials, ("proposed",), mid),
        "xi": SweepSpec("xi", (0.0, 0.005, 0.01, 0.05, 0.1), trials, ("proposed",), mid),
        "p_max": SweepSpec("p_max", (0.3, 0.4, 0.5, 1.0, 2.0, 3.0), trials, ("proposed",), mid),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--only", nargs="*", help="subset of sweep names")
    args = ap.parse_args()

    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name, spec in sweeps(args.trials).items():
        if args.only and name not in args.only:
            continue
        t0 = time.perf_counter()
        points = monte_carlo(spec, jobs=args.jobs)
        with open(out / f"{name}.csv", "w", newline="") as fh:
            write_csv(points, fh)
        summary = ", ".join(f"{p.value:g}:{p.ee_mean:.4f}" for p in points if p.scheme == "proposed")
        print(f"{name:9s} {time.perf_counter() - t0:6.1f} s  proposed EE {summary}")


if __name__ == "__main__":
    main()
