"""Monte-Carlo sweeps over one scenario parameter and their CSV output.

Trial ``i`` of every grid point uses seed ``base.seed + i``, so all schemes
at a grid point see the same channel and a sweep is reproducible under any
number of worker processes. Trials that raise (typically an infeasible
budget at extreme grid corners) are skipped and show up as a lower
``trials_ok``.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from relay_ee.channel import ConfigError, SystemConfig, draw_channels
from relay_ee.pipeline import GuardRailError, Scheme, check_oracle_size, run_scheme
from relay_ee.power import InfeasibleBudget

AXES = {
    "cnr_db": "avg_cnr_db",
    "p_static": "p_static_w",
    "xi": "xi",
    "p_max": "p_max_w",
    "K": "num_users",
    "N": "num_subcarriers",
}
INTEGER_AXES = ("K", "N")
BASE_COLUMNS = (
    "axis",
    "value",
    "scheme",
    "trials_ok",
    "ee_mean",
    "ee_stderr",
    "se_mean",
    "ptrans_mean",
    "delta_mean",
)


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    grid: tuple
    trials: int
    schemes: tuple = (Scheme.PROPOSED.value,)
    base: SystemConfig = field(default_factory=SystemConfig)

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"unknown axis {self.axis!r}; choose from {sorted(AXES)}")
        if len(self.grid) == 0:
            raise ConfigError("sweep grid is empty")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        schemes = tuple(Scheme(s).value for s in self.schemes)
        object.__setattr__(self, "schemes", schemes)
        object.__setattr__(self, "grid", tuple(self.grid))
        if self.base.seed + self.trials > 2**64:
            raise ConfigError("base seed + trials overflows the 64-bit seed range")


def linear_grid(start: float, stop: float, steps: int, *, integer: bool = False) -> tuple:
    if steps < 1:
        raise ConfigError("steps must be >= 1")
    pts = np.linspace(start, stop, steps)
    if integer:
        return tuple(int(round(v)) for v in pts)
    return tuple(float(v) for v in pts)


def config_at(base: SystemConfig, axis: str, value) -> SystemConfig:
    """Base config with the swept parameter set to ``value``."""
    if axis in INTEGER_AXES:
        value = int(value)
    return base.replace(**{AXES[axis]: value})


@dataclass(frozen=True)
class TrialOutcome:
    ee: float
    se: float
    p_trans: float
    delta: float
    rates: tuple


def _trial(task):
    """Run every scheme on one channel draw. Failures come back as strings."""
    config, schemes = task
    ch = draw_channels(config)
    out = {}
    for scheme in schemes:
        try:
            r = run_scheme(scheme, config, ch)
        except InfeasibleBudget as exc:
            out[scheme] = f"infeasible: {exc}"
            continue
        sol = r.solution
        out[scheme] = TrialOutcome(sol.ee, sol.sum_rate, sol.p_trans, sol.delta, tuple(float(x) for x in sol.rates))
    return out


@dataclass
class CurvePoint:
    axis: str
    value: float
    scheme: str
    trials: int
    trials_ok: int
    ee_mean: float
    ee_stderr: float
    se_mean: float
    ptrans_mean: float
    delta_mean: float
    rate_means: tuple
    failures: list = field(default_factory=list, repr=False)


def _mean(xs) -> float:
    return math.fsum(xs) / len(xs) if xs else math.nan


def _stderr(xs) -> float:
    if len(xs) < 2:
        return math.nan
    m = _mean(xs)
    var = math.fsum((x - m) ** 2 for x in xs) / (len(xs) - 1)
    return math.sqrt(var / len(xs))


def aggregate(axis, value, scheme, outcomes, num_users) -> CurvePoint:
    """Summarize per-trial outcomes, given in trial order.

    Sums are exactly rounded (``math.fsum``), so the result does not depend
    on the order in which trials finished.
    """
    ok = [o for o in outcomes if isinstance(o, TrialOutcome)]
    failed = [o for o in outcomes if not isinstance(o, TrialOutcome)]
    rate_means = tuple(_mean([o.rates[k] for o in ok]) for k in range(num_users))
    return CurvePoint(
        axis=axis,
        value=value,
        scheme=scheme,
        trials=len(outcomes),
        trials_ok=len(ok),
        ee_mean=_mean([o.ee for o in ok]),
        ee_stderr=_stderr([o.ee for o in ok]),
        se_mean=_mean([o.se for o in ok]),
        ptrans_mean=_mean([o.p_trans for o in ok]),
        delta_mean=_mean([o.delta for o in ok]),
        rate_means=rate_means,
        failures=failed,
    )


def monte_carlo(spec: SweepSpec, *, jobs: int = 1) -> list[CurvePoint]:
    """One CurvePoint per (grid point, scheme), grid-major in scheme order."""
    configs = [config_at(spec.base, spec.axis, v) for v in spec.grid]
    if Scheme.ORACLE.value in spec.schemes:
        for c in configs:
            check_oracle_size(c)
    tasks = [(c.replace(seed=spec.base.seed + i), spec.schemes) for c in configs for i in range(spec.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trial, tasks, chunksize=max(1, len(tasks) // (8 * jobs))))
    else:
        results = [_trial(t) for t in tasks]

    points = []
    for g, (value, c) in enumerate(zip(spec.grid, configs)):
        block = results[g * spec.trials : (g + 1) * spec.trials]
        for scheme in spec.schemes:
            points.append(aggregate(spec.axis, value, scheme, [r[scheme] for r in block], c.num_users))
    return points


def fmt(x) -> str:
    """Shortest round-trip decimal for floats, plain text otherwise."""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def csv_header(max_users: int) -> list[str]:
    return list(BASE_COLUMNS) + [f"r_user_{k + 1}" for k in range(max_users)]


def curve_rows(points: list[CurvePoint]):
    """Header plus one row per point; users beyond a point's K are left blank."""
    max_users = max(len(p.rate_means) for p in points)
    yield csv_header(max_users)
    for p in points:
        row = [p.axis, fmt(p.value), p.scheme, str(p.trials_ok)]
        row += [fmt(x) for x in (p.ee_mean, p.ee_stderr, p.se_mean, p.ptrans_mean, p.delta_mean)]
        row += [fmt(x) for x in p.rate_means] + [""] * (max_users - len(p.rate_means))
        yield row


def write_csv(points: list[CurvePoint], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerows(curve_rows(points))


__all__ = [
    "AXES",
    "CurvePoint",
    "GuardRailError",
    "SweepSpec",
    "TrialOutcome",
    "aggregate",
    "config_at",
    "linear_grid",
    "monte_carlo",
    "write_csv",
]
