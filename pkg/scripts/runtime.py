"""Wall-clock time of each scheme on the small and large scenarios."""

import time

from relay_ee import SystemConfig, draw_channels, run_scheme

SMALL = SystemConfig(num_subcarriers=4, num_users=2, num_relays=5)
LARGE = SystemConfig(num_subcarriers=50, num_users=10, num_relays=20, alpha=(1, 1, 2, 3, 4, 5, 5, 6, 6, 7),
                     avg_cnr_db=20.0)


def timed(scheme, cfg, reps):
    ch = draw_channels(cfg)
    t0 = time.perf_counter()
    for _ in range(reps):
        run_scheme(scheme, cfg, ch)
    return (time.perf_counter() - t0) / reps


if __name__ == "__main__":
    for name, cfg, schemes in (
        ("N=4 K=2 L=5", SMALL, ("proposed", "oracle", "randr-opa", "beam-epa")),
        ("N=50 K=10 L=20", LARGE, ("proposed", "randr-opa", "beam-epa")),
    ):
        for s in schemes:
            print(f"{name:16s} {s:10s} {1e3 * timed(s, cfg, 20):8.2f} ms")
