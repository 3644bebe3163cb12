"""Acceptance criteria, one summary line per criterion.

Each check prints its verdict as it runs and the terminal summary repeats
one PASS/FAIL line per criterion. Trend checks run the full 1000-trial
Monte-Carlo at N=50, L=20, K=10 and take several minutes.
"""

import math
import time

import numpy as np
import pytest

from _util import pair_channel, random_problem, rel
from conftest import ACCEPTANCE
from relay_ee.channel import SystemConfig, draw_channels
from relay_ee.pipeline import initial_transmit_power, optimize, oracle
from relay_ee.power import (
    InfeasibleBudget,
    build_profile,
    delta_sharp,
    ee_of_delta,
    g_function,
    subcarrier_powers,
    total_transmit_power,
    transmit_power_derivative,
)
from relay_ee.subcarrier import Assignment, assign_subcarriers
from relay_ee.sweep import SweepSpec, monte_carlo
from relay_ee.virtual_link import best_relay_set_exhaustive, df_optimal_split, hop_snrs, link_table, select_relay_set

LARGE = SystemConfig(num_subcarriers=50, num_users=10, num_relays=20, alpha=(1, 1, 2, 3, 4, 5, 5, 6, 6, 7))
TRIALS = 1000


def record(crit, ok, detail, label=""):
    ACCEPTANCE[crit].append((label, bool(ok), detail))
    tag = f"{crit}{label and '(' + label + ')'}"
    print(f"{'PASS' if ok else 'FAIL'} criterion {tag}: {detail}")
    assert ok, detail


# 1 ---------------------------------------------------------------------------


def test_c1_oracle_gap():
    t0 = time.perf_counter()
    base = SystemConfig(num_subcarriers=4, num_users=2, num_relays=5, alpha=(1, 1))
    worst_gap, violations, skipped, parts = 0.0, 0, 0, []
    for cnr in (5, 10, 15):
        for xi in (0.0, 0.01):
            gaps = []
            for seed in range(100):
                cfg = base.replace(avg_cnr_db=cnr, xi=xi, seed=seed)
                ch = draw_channels(cfg)
                try:
                    best, ours = oracle(cfg, ch).ee, optimize(cfg, ch).ee
                except InfeasibleBudget:
                    skipped += 1
                    continue
                violations += best < ours * (1 - 1e-12)
                gaps.append((best - ours) / best)
            m = float(np.mean(gaps))
            worst_gap = max(worst_gap, m)
            parts.append(f"{cnr}dB/xi={xi}: {100 * m:.2f}%")
    ok = worst_gap <= 0.05 and violations == 0
    record(1, ok, f"mean gaps {', '.join(parts)} (<= 5%); oracle < proposed on {violations} seeds; "
                  f"{skipped} infeasible skipped; {time.perf_counter() - t0:.1f} s")


# 2 ---------------------------------------------------------------------------


def test_c2_relay_set_argmax():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    failures = 0
    for _ in range(1000):
        l = int(rng.integers(1, 11))
        ch = pair_channel(rng.exponential(10), rng.exponential(10, l), rng.exponential(10, l))
        brute = best_relay_set_exhaustive(0, 0, ch).beta
        fast = select_relay_set(0, 0, ch).beta
        table = float(link_table(ch).beta[0, 0])
        failures += rel(fast, brute) > 1e-12 or rel(table, brute) > 1e-12
    elapsed = time.perf_counter() - t0
    record(2, failures == 0 and elapsed <= 60, f"{failures} mismatches in 1000 instances (L<=10), {elapsed:.1f} s")


# 3 ---------------------------------------------------------------------------


def test_c3_hop_equalization():
    rng = np.random.default_rng(3)
    worst, n = 0.0, 0
    while n < 10_000:
        l = int(rng.integers(1, 7))
        ch = pair_channel(rng.exponential(10), rng.exponential(10, l), rng.exponential(10, l))
        d = select_relay_set(0, 0, ch)
        if d.rho == 0:
            continue
        p = 10 ** rng.uniform(-4, 2)
        relay, user = hop_snrs(df_optimal_split(p, d, ch), d, ch)
        # the two arguments of the min are 1 + SNR
        worst = max(worst, rel(1 + relay, 1 + user))
        n += 1
    record(3, worst <= 1e-12, f"max relative hop mismatch {worst:.2e} over 10^4 DF splits (<= 1e-12)")


# 4 ---------------------------------------------------------------------------


def test_c4_fairness():
    worst, runs = 0.0, 0
    cases = [(LARGE, cnr, 100) for cnr in (10, 20, 30)] + [(SystemConfig(), 10, 200)]
    cases.append((SystemConfig(num_subcarriers=16, num_users=4, num_relays=8, alpha=(1, 2, 3, 4)), 15, 200))
    for base, cnr, seeds in cases:
        for seed in range(seeds):
            cfg = base.replace(avg_cnr_db=cnr, seed=seed)
            try:
                r = optimize(cfg, draw_channels(cfg))
            except InfeasibleBudget:
                continue
            ratio = r.solution.rates / np.array(cfg.alpha)
            worst = max(worst, float(np.ptp(ratio) / ratio.max()))
            runs += 1
    record(4, worst <= 1e-10, f"max relative spread of R_k/alpha_k {worst:.2e} over {runs} runs incl. K=10, N=50, L=20")


# 5 ---------------------------------------------------------------------------


def grid_scan_max(f, lo, hi, points=10_001, rounds=4):
    """Dense grid maximizer, zooming on the best cell."""
    for _ in range(rounds):
        grid = np.linspace(lo, hi, points)
        i = int(np.argmax([f(x) for x in grid]))
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, points - 1)]
    return float(grid[0]) if i == 0 and lo == grid[0] else 0.5 * (lo + hi)


def scenario_profile(rng):
    """Profile the proposed scheme would build for a random scenario."""
    k = int(rng.integers(1, 5))
    cfg = SystemConfig(
        num_subcarriers=int(rng.integers(max(k, 2), 17)),
        num_users=k,
        num_relays=int(rng.integers(0, 7)),
        avg_cnr_db=float(rng.uniform(5, 25)),
        p_static_w=float(rng.uniform(0.05, 0.5)),
        xi=float(rng.choice([0.0, 0.01])),
        alpha=tuple(rng.uniform(0.5, 3.0, k)),
        seed=int(rng.integers(2**63)),
    )
    ups = link_table(draw_channels(cfg)).upsilon
    a = assign_subcarriers(ups, initial_transmit_power(cfg), cfg.alpha)
    return build_profile(a, ups, cfg.alpha, cfg.num_subcarriers), cfg


def test_c5_delta_sharp():
    rng = np.random.default_rng(5)
    g_bad = uni_bad = 0
    worst = 0.0
    clamped_count = 0
    for _ in range(100):
        prof, cfg = scenario_profile(rng)
        d_sharp, clamped = delta_sharp(prof, cfg)
        clamped_count += clamped
        hi = 4 * max(d_sharp, prof.delta_min + 1e-3)
        grid = np.linspace(prof.delta_min, hi, 10_000)
        g = np.array([g_function(prof, d, cfg) for d in grid])
        g_bad += not np.all(np.diff(g) < 0)
        ee = np.array([ee_of_delta(prof, d, cfg) for d in grid])
        signs = np.sign(np.diff(ee))
        signs = signs[signs != 0]
        uni_bad += int(np.sum(signs[1:] != signs[:-1])) > 1
        scan = grid_scan_max(lambda d: ee_of_delta(prof, d, cfg), prof.delta_min, hi)
        worst = max(worst, rel(d_sharp, scan))
    ok = g_bad == 0 and uni_bad == 0 and worst <= 1e-6
    record(5, ok, f"G not strictly decreasing on {g_bad}/100 grids, EE not unimodal on {uni_bad}/100, "
                  f"max |delta_sharp - grid scan| rel {worst:.2e} (<= 1e-6; {clamped_count} at the domain floor)")


# 6 ---------------------------------------------------------------------------


def test_c6_derivative():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(1000):
        prof, _, _ = random_problem(rng)
        d = prof.delta_min + rng.uniform(0.01, 0.5)
        h = 1e-6
        fd = (total_transmit_power(prof, d + h) - total_transmit_power(prof, d - h)) / (2 * h)
        worst = max(worst, rel(fd, transmit_power_derivative(prof, d)))
    record(6, worst <= 1e-6, f"max relative error vs central difference {worst:.2e} over 1000 samples (<= 1e-6)")


# 7 ---------------------------------------------------------------------------

CNR_GRID = (10.0, 15.0, 20.0, 25.0, 30.0)
SCHEMES = ("proposed", "randr-opa", "beam-epa")


@pytest.fixture(scope="module")
def cnr_sweep():
    pts = monte_carlo(SweepSpec("cnr_db", CNR_GRID, TRIALS, SCHEMES, LARGE))
    return {s: [p for p in pts if p.scheme == s] for s in SCHEMES}


def _second_diffs(points):
    return np.diff([p.ee_mean for p in points], 2)


def test_c7a_cnr_growth_xi0(cnr_sweep):
    d2 = _second_diffs(cnr_sweep["proposed"])
    record(7, np.all(d2 >= 0), f"xi=0 second differences {np.round(d2, 4).tolist()} (>= 0)", "a")


def test_c7b_cnr_growth_xi001():
    pts = monte_carlo(SweepSpec("cnr_db", CNR_GRID, TRIALS, ("proposed",), LARGE.replace(xi=0.01)))
    d2 = _second_diffs(pts)
    record(7, np.all(d2 <= 0), f"xi=0.01 second differences {np.round(d2, 4).tolist()} (<= 0)", "b")


def test_c7c_static_and_xi():
    base = LARGE.replace(avg_cnr_db=15.0)
    ps = monte_carlo(SweepSpec("p_static", (0.0, 0.1, 0.2, 0.3, 0.4), TRIALS, ("proposed",), base))
    xs = monte_carlo(SweepSpec("xi", (0.0, 0.005, 0.01, 0.05, 0.1), TRIALS, ("proposed",), base))
    ee_ps = [p.ee_mean for p in ps]
    ee_xi = [p.ee_mean for p in xs]
    ok = bool(np.all(np.diff(ee_ps) <= 0) and np.all(np.diff(ee_xi) <= 0))
    record(7, ok, f"EE vs P_static {np.round(ee_ps, 3).tolist()}, vs xi {np.round(ee_xi, 3).tolist()} (non-increasing)", "c")


def test_c7d_pmax_plateau():
    grid = (0.3, 0.4, 0.5, 1.0, 2.0, 3.0)
    pts = monte_carlo(SweepSpec("p_max", grid, TRIALS, ("proposed",), LARGE.replace(avg_cnr_db=15.0)))
    ee = np.array([p.ee_mean for p in pts])
    se = np.array([p.ee_stderr for p in pts])
    noise = 2 * np.sqrt(se[1:] ** 2 + se[:-1] ** 2)
    rising = bool(np.all(np.diff(ee) >= -noise))
    plateau = [i for i in range(len(ee)) if np.all(np.abs(ee[i:] - ee[-1]) <= 2 * np.hypot(se[i:], se[-1]))]
    start = plateau[0]
    grows = ee[-1] - ee[0] > 2 * math.hypot(se[0], se[-1])
    ok = rising and grows and start <= len(ee) - 2
    ok_counts = [p.trials_ok for p in pts]
    record(7, ok, f"EE vs P_max {np.round(ee, 4).tolist()}, plateau from P_max={grid[start]} W "
                  f"(feasible trials {ok_counts})", "d")


def test_c7e_baselines(cnr_sweep):
    prop = np.array([p.ee_mean for p in cnr_sweep["proposed"]])
    rr = np.array([p.ee_mean for p in cnr_sweep["randr-opa"]])
    be = np.array([p.ee_mean for p in cnr_sweep["beam-epa"]])
    ok = bool(np.all(prop > rr) and np.all(prop > be))
    record(7, ok, f"proposed {np.round(prop, 3).tolist()} vs RandR-OPA {np.round(rr, 3).tolist()} "
                  f"vs Beam-EPA {np.round(be, 3).tolist()}", "e")


# 8 ---------------------------------------------------------------------------


def proj_simplex(v, total):
    """Euclidean projection onto {p >= 0, sum p = total}."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    rho = np.nonzero(u - css / np.arange(1, len(v) + 1) > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def pg_max_rate(ups, total, iters=5000):
    """Projected gradient ascent of sum log(1 + ups * p) at fixed total power.

    Barzilai-Borwein steps with Armijo backtracking.
    """

    def f(p):
        return np.sum(np.log1p(ups * p))

    def grad(p):
        return ups / (1 + ups * p)

    p = np.full(len(ups), total / len(ups))
    g = grad(p)
    t = 1.0 / np.max(ups) ** 2
    for _ in range(iters):
        while True:
            q = proj_simplex(p + t * g, total)
            if f(q) >= f(p) + 1e-4 * np.dot(g, q - p) or t < 1e-12 / np.max(ups) ** 2:
                break
            t *= 0.5
        s = q - p
        if np.max(np.abs(s)) <= 1e-15 * total:
            return q
        gq = grad(q)
        sy = np.dot(s, g - gq)
        p, g = q, gq
        t = np.dot(s, s) / sy if sy > 0 else 1.0 / np.max(ups) ** 2
    return p


def test_c8_water_filling_oracle():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(100):
        ups = rng.uniform(0.5, 50.0, 3)
        prof = build_profile(Assignment.from_owner([0, 0, 0]), ups[:, None], [1.0], 3)
        d = prof.delta_min + rng.uniform(0.05, 0.5)
        closed = subcarrier_powers(prof, d, 3)
        numeric = pg_max_rate(ups, closed.sum())
        worst = max(worst, float(np.max(np.abs(numeric - closed)) / closed.max()))
    record(8, worst <= 1e-6, f"max power deviation from projected-gradient optimum {worst:.2e} "
                             f"of the user's largest power, 100 three-subcarrier instances (<= 1e-6)")


# 9 ---------------------------------------------------------------------------


def test_c9_kappa_loop():
    base = SystemConfig(num_subcarriers=8, num_users=2, num_relays=4)
    kappas, converged, infeasible = [], 0, 0
    endings = {}
    for seed in range(1000):
        cfg = base.replace(seed=seed)
        try:
            r = optimize(cfg, draw_channels(cfg))
        except InfeasibleBudget:
            infeasible += 1
            continue
        kappas.append(r.iterations)
        converged += r.converged and r.iterations <= 5
        endings[r.termination] = endings.get(r.termination, 0) + 1
    runs = len(kappas)
    frac_conv = converged / runs
    frac_two = float(np.mean(np.array(kappas) <= 2))
    ok = frac_conv == 1.0 and frac_two >= 0.95
    record(9, ok, f"converged with kappa <= 5 in {100 * frac_conv:.1f}% (need 100%), kappa <= 2 in "
                  f"{100 * frac_two:.1f}% (need >= 95%) of {runs} runs; endings {endings}; "
                  f"{infeasible} seeds infeasible before the loop")
