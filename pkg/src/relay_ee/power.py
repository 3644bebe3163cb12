"""Fairness-exact water-filling parameterized by the common rate ratio delta.

For a fixed subcarrier assignment every user must reach ``R_k = delta *
alpha_k``. Water-filling across a user's subcarriers then fixes the power on
every subcarrier in closed form, so transmit power, total power and energy
efficiency all become scalar functions of delta. EE(delta) rises then falls;
its peak is the root of

    G(delta) = eta * P_trans(delta) + P_static - delta * eta * P_trans'(delta)

and the power budget caps delta from above.

Rates are spectral (bit/s/Hz). A subcarrier's rate is
``rate_factor * log2(1 + upsilon * P)`` with ``rate_factor = 1 / (2N)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from relay_ee.channel import SystemConfig
from relay_ee.subcarrier import Assignment
from relay_ee.virtual_link import LinkTable, NodePowerSplit, df_optimal_split

log = logging.getLogger(__name__)

LN2 = math.log(2.0)


class DomainError(ValueError):
    """delta below the floor where the weakest subcarrier's power turns negative."""


class InfeasibleBudget(RuntimeError):
    """Even the smallest admissible delta needs more than P_max."""


@dataclass(frozen=True)
class DeltaProfile:
    alpha: np.ndarray  # (K,)
    rate_factor: float
    subcarriers: tuple[np.ndarray, ...]  # per user, sorted by ascending upsilon
    upsilon_sorted: tuple[np.ndarray, ...]
    sizes: np.ndarray  # |S_k|
    ups_min: np.ndarray  # weakest upsilon per user
    q: np.ndarray  # Q_k
    offset: np.ndarray  # sum_n (1/ups_min - 1/ups_n), the delta-free power of user k
    delta_min: float

    @property
    def num_users(self) -> int:
        return len(self.alpha)

    @property
    def alpha_sum(self) -> float:
        return float(self.alpha.sum())


def build_profile(assignment: Assignment, upsilon, alpha, n_total: int | None = None, *, rate_factor=None) -> DeltaProfile:
    """Collect what the delta-parameterized water-filling needs.

    ``upsilon`` is the (N, K) virtual-link CNR matrix. ``rate_factor``
    overrides ``1 / (2 * n_total)``.
    """
    upsilon = np.asarray(upsilon, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if rate_factor is None:
        n_total = upsilon.shape[0] if n_total is None else n_total
        rate_factor = 1.0 / (2 * n_total)
    subs, ups = [], []
    for k, s in enumerate(assignment.sets):
        if not s:
            raise ValueError(f"user {k} has no subcarriers")
        s = np.asarray(s, dtype=int)
        u = upsilon[s, k]
        if np.any(u <= 0):
            raise ValueError("virtual-link CNRs must be positive")
        idx = np.argsort(u, kind="stable")
        subs.append(s[idx])
        ups.append(u[idx])
    sizes = np.array([len(s) for s in subs], dtype=float)
    ups_min = np.array([u[0] for u in ups])
    q = np.array([rate_factor * np.sum(np.log2(u / u[0])) for u in ups])
    offset = np.array([np.sum(1.0 / u[0] - 1.0 / u) for u in ups])
    delta_min = float(np.max(q / alpha))
    return DeltaProfile(alpha, float(rate_factor), tuple(subs), tuple(ups), sizes, ups_min, q, offset, delta_min)


def _check(profile: DeltaProfile, delta: float) -> None:
    if not delta >= profile.delta_min * (1.0 - 1e-12) - 1e-300:
        raise DomainError(f"delta={delta!r} below delta_min={profile.delta_min!r}")


def _level(profile: DeltaProfile, delta: float) -> np.ndarray:
    """2**(rate on each user's weakest subcarrier / rate_factor), per user."""
    expo = (delta * profile.alpha - profile.q) / (profile.rate_factor * profile.sizes)
    return np.exp2(np.maximum(expo, 0.0))


def per_subcarrier_power(profile: DeltaProfile, delta: float, k: int, n: int) -> float:
    """Water-filling power of user k on subcarrier n at ratio delta."""
    _check(profile, delta)
    where = np.flatnonzero(profile.subcarriers[k] == n)
    if where.size == 0:
        raise ValueError(f"subcarrier {n} is not assigned to user {k}")
    u1 = profile.ups_min[k]
    un = profile.upsilon_sorted[k][where[0]]
    return float((_level(profile, delta)[k] - 1.0) / u1 + (un - u1) / (un * u1))


def subcarrier_powers(profile: DeltaProfile, delta: float, n_total: int) -> np.ndarray:
    """(N,) power of every subcarrier, indexed by subcarrier."""
    _check(profile, delta)
    level = _level(profile, delta)
    out = np.zeros(n_total)
    for k in range(profile.num_users):
        u1 = profile.ups_min[k]
        u = profile.upsilon_sorted[k]
        out[profile.subcarriers[k]] = (level[k] - 1.0) / u1 + (u - u1) / (u * u1)
    return out


def user_rates(profile: DeltaProfile, powers: np.ndarray) -> np.ndarray:
    return np.array(
        [
            profile.rate_factor * np.sum(np.log2(1.0 + u * powers[s]))
            for s, u in zip(profile.subcarriers, profile.upsilon_sorted)
        ]
    )


def total_transmit_power(profile: DeltaProfile, delta: float) -> float:
    _check(profile, delta)
    level = _level(profile, delta)
    return float(np.sum(profile.sizes * (level - 1.0) / profile.ups_min + profile.offset))


def transmit_power_derivative(profile: DeltaProfile, delta: float) -> float:
    _check(profile, delta)
    level = _level(profile, delta)
    return float(np.sum(profile.alpha * LN2 * level / (profile.rate_factor * profile.ups_min)))


def total_power(profile: DeltaProfile, delta: float, config: SystemConfig) -> float:
    return config.eta * total_transmit_power(profile, delta) + config.p_static_w + config.xi * delta * profile.alpha_sum


def ee_of_delta(profile: DeltaProfile, delta: float, config: SystemConfig) -> float:
    """Energy efficiency (bit/Hz/J) at ratio delta."""
    rate = delta * profile.alpha_sum
    den = total_power(profile, delta, config)
    if delta == 0 and den == 0:
        # ideal circuit at the origin: take the limit rate / power
        return profile.alpha_sum / (config.eta * transmit_power_derivative(profile, 0.0) + config.xi * profile.alpha_sum)
    return rate / den


def g_function(profile: DeltaProfile, delta: float, config: SystemConfig) -> float:
    """Sign of dEE/d(delta); strictly decreasing in delta."""
    p = total_transmit_power(profile, delta)
    dp = transmit_power_derivative(profile, delta)
    return config.eta * (p - delta * dp) + config.p_static_w


def _bisect(f, lo: float, hi: float, rtol: float = 1e-13, max_iter: int = 300) -> tuple[float, float]:
    """Shrink [lo, hi] with f(lo) > 0 >= f(hi) (in sign)."""
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= rtol * abs(hi):
            break
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo, hi


def delta_sharp(profile: DeltaProfile, config: SystemConfig) -> tuple[float, bool]:
    """Unconstrained EE maximizer; ``(delta, clamped)``.

    ``clamped`` is True when EE already falls at the domain floor.
    """
    lo = profile.delta_min
    if g_function(profile, lo, config) <= 0:
        return lo, True
    width = 1e-3 * (1.0 + lo)
    hi = lo + width
    while g_function(profile, hi, config) > 0:
        lo, width = hi, 2.0 * width
        hi = lo + width
        if not math.isfinite(hi) or width > 1e6:
            raise RuntimeError("could not bracket the EE maximizer")
    lo, hi = _bisect(lambda d: g_function(profile, d, config), lo, hi)
    return 0.5 * (lo + hi), False


@dataclass
class PowerSolution:
    delta: float
    p_n: np.ndarray  # (N,) power of each subcarrier's virtual link
    rates: np.ndarray  # (K,) bit/s/Hz
    p_trans: float
    p_total: float
    ee: float
    budget_binding: bool
    clamped: bool = False
    delta_sharp: float = float("nan")
    owner: np.ndarray | None = None
    splits: dict = field(default_factory=dict)

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.rates))

    @property
    def p_kn(self) -> dict:
        """(k, n) -> virtual-link power, for assigned pairs only."""
        if self.owner is None:
            return {}
        return {(int(k), n): float(self.p_n[n]) for n, k in enumerate(self.owner)}


def find_delta_star(
    profile: DeltaProfile,
    config: SystemConfig,
    n_total: int | None = None,
    links: LinkTable | None = None,
    ch=None,
) -> PowerSolution:
    """Best delta under the budget, with the full power solution.

    The unconstrained maximizer is used when its total power fits in
    ``P_max``; otherwise delta is lowered until the budget is met exactly.
    Per-node splits are filled in when ``links`` and ``ch`` are given.
    """
    if n_total is None:
        n_total = int(sum(len(s) for s in profile.subcarriers))
    d_min = profile.delta_min
    if total_power(profile, d_min, config) > config.p_max_w:
        raise InfeasibleBudget(
            f"P_total(delta_min)={total_power(profile, d_min, config):.6g} W exceeds P_max={config.p_max_w} W"
        )
    d_sharp, clamped = delta_sharp(profile, config)
    if clamped:
        log.info("EE is decreasing at delta_min=%g; delta clamped to the domain floor", d_min)
    if total_power(profile, d_sharp, config) <= config.p_max_w:
        delta, binding = d_sharp, False
    else:
        lo, _ = _bisect(lambda d: config.p_max_w - total_power(profile, d, config), d_min, d_sharp)
        delta, binding = lo, True
    return build_solution(profile, config, delta, n_total, links, ch, binding=binding, clamped=clamped, d_sharp=d_sharp)


def build_solution(profile, config, delta, n_total, links=None, ch=None, *, binding=False, clamped=False, d_sharp=float("nan")):
    p_n = subcarrier_powers(profile, delta, n_total)
    rates = user_rates(profile, p_n)
    p_trans = float(np.sum(p_n))
    p_total = config.eta * p_trans + config.p_static_w + config.xi * delta * profile.alpha_sum
    owner = np.empty(n_total, dtype=int)
    for k, s in enumerate(profile.subcarriers):
        owner[s] = k
    splits: dict[tuple[int, int], NodePowerSplit] = {}
    if links is not None and ch is not None:
        for n, k in enumerate(owner):
            splits[(int(k), n)] = df_optimal_split(p_n[n], links.decision(int(k), n), ch)
    return PowerSolution(
        delta=float(delta),
        p_n=p_n,
        rates=rates,
        p_trans=p_trans,
        p_total=float(p_total),
        ee=ee_of_delta(profile, delta, config),
        budget_binding=binding,
        clamped=clamped,
        delta_sharp=float(d_sharp),
        owner=owner,
        splits=splits,
    )
