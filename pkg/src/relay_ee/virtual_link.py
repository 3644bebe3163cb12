"""DF relay beamforming per (user, subcarrier) pair, reduced to a virtual direct link.

Slot 1: the BS broadcasts at power ``P_B``; every helping relay must decode,
so the slot-1 SNR is set by the weakest BS->relay CNR. Slot 2: the BS and
the helping relays beamform coherently (virtual MISO). With the power split
that equalizes the two hops, the pair behaves like a direct link with CNR
``upsilon = 2 * beta * gamma_bk``, where ``beta`` is the beamforming power
gain. Without relays the BS repeats its slot-1 symbol and the user combines
both copies, giving ``upsilon = 2 * gamma_bk``.

Relay sets are plain tuples of relay indices; the BS is implicit. Node power
maps use the key ``"B"`` for the BS.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from relay_ee.channel import ChannelRealization

BS = "B"


@dataclass(frozen=True)
class VirtualLinkDecision:
    user: int
    subcarrier: int
    relay_set: tuple[int, ...]
    beta: float
    rho: int
    upsilon: float


@dataclass(frozen=True)
class NodePowerSplit:
    p_b_slot1: float
    p_nodes_slot2: dict

    @property
    def pair_power(self) -> float:
        """Time-averaged power of the pair; each slot lasts half the block."""
        return 0.5 * self.p_b_slot1 + 0.5 * sum(self.p_nodes_slot2.values())


def _check_set(relay_set, num_relays: int) -> tuple[int, ...]:
    members = tuple(int(r) for r in relay_set)
    if len(set(members)) != len(members):
        raise ValueError(f"duplicate relays in {members}")
    if any(r < 0 or r >= num_relays for r in members):
        raise ValueError(f"relay index out of range in {members} (L={num_relays})")
    return members


def miso_cnr(relay_set, k: int, n: int, ch: ChannelRealization) -> float:
    """Slot-2 MISO CNR: the BS plus every helping relay."""
    members = _check_set(relay_set, ch.shape[2])
    return float(ch.gamma_bk[n, k] + sum(ch.gamma_rk[n, r, k] for r in members))


def bottleneck_cnr(relay_set, n: int, ch: ChannelRealization) -> float:
    members = _check_set(relay_set, ch.shape[2])
    if not members:
        raise ValueError("bottleneck of an empty relay set is undefined")
    return float(min(ch.gamma_br[n, r] for r in members))


def beta_from_parts(gamma_min, gamma_relays, gamma_direct):
    """Beamforming power gain from the bottleneck CNR, the relay-only
    slot-2 CNR sum and the direct CNR. Works elementwise on arrays."""
    return (gamma_relays + gamma_direct) * gamma_min / (gamma_direct * (gamma_min + gamma_relays))


def beta(relay_set, k: int, n: int, ch: ChannelRealization) -> float:
    members = _check_set(relay_set, ch.shape[2])
    if not members:
        raise ValueError("beta needs a nonempty relay set")
    g_min = bottleneck_cnr(members, n, ch)
    g_rel = float(sum(ch.gamma_rk[n, r, k] for r in members))
    return float(beta_from_parts(g_min, g_rel, ch.gamma_bk[n, k]))


def _sorted_by_first_hop(members, n, ch) -> tuple[int, ...]:
    # descending first-hop CNR, ties by relay index
    return tuple(sorted(members, key=lambda r: (-ch.gamma_br[n, r], r)))


def bottleneck_gap(relay_set, n: int, ch: ChannelRealization) -> float:
    """First-hop CNR gap between the bottleneck relay and the next weakest one.

    This is how much the bottleneck CNR rises when the bottleneck relay is
    dropped from the set.
    """
    members = _sorted_by_first_hop(_check_set(relay_set, ch.shape[2]), n, ch)
    if len(members) < 2:
        raise ValueError("the gap needs at least two relays")
    return float(ch.gamma_br[n, members[-2]] - ch.gamma_br[n, members[-1]])


def _phi_parts(members, k, n, ch):
    g_min = float(ch.gamma_br[n, members[-1]])
    g_bk = float(ch.gamma_bk[n, k])
    g_rel = float(sum(ch.gamma_rk[n, r, k] for r in members))
    g_last = float(ch.gamma_rk[n, members[-1], k])
    num = g_last * g_min**2 - g_bk * g_last * g_min
    den = g_rel**2 + g_bk * g_rel - g_min * g_last - g_rel * g_last
    return num, den


def phi_threshold(relay_set, k: int, n: int, ch: ChannelRealization) -> float:
    """Gap threshold deciding whether dropping the bottleneck relay helps.

    With a positive denominator (see :func:`phi_denominator`), a first-hop
    gap below the threshold means dropping the bottleneck lowers ``beta``;
    a gap above it means dropping it raises ``beta``. A negative
    denominator flips both directions.
    """
    members = _sorted_by_first_hop(_check_set(relay_set, ch.shape[2]), n, ch)
    if len(members) < 2:
        raise ValueError("phi needs at least two relays")
    num, den = _phi_parts(members, k, n, ch)
    if den == 0:
        raise ZeroDivisionError("phi denominator vanishes for this set")
    return num / den


def phi_denominator(relay_set, k: int, n: int, ch: ChannelRealization) -> float:
    members = _sorted_by_first_hop(_check_set(relay_set, ch.shape[2]), n, ch)
    if len(members) < 2:
        raise ValueError("phi needs at least two relays")
    return _phi_parts(members, k, n, ch)[1]


def _decision(k, n, ch, relay_set, b) -> VirtualLinkDecision:
    g_bk = float(ch.gamma_bk[n, k])
    if relay_set and b > 1.0:
        return VirtualLinkDecision(k, n, tuple(relay_set), float(b), 1, 2.0 * b * g_bk)
    return VirtualLinkDecision(k, n, (), 1.0, 0, 2.0 * g_bk)


def select_relay_set(k: int, n: int, ch: ChannelRealization) -> VirtualLinkDecision:
    """Best helping relay set for the pair (k, n).

    Relays whose BS->relay CNR does not exceed the direct CNR are dropped.
    The survivors are ordered by BS->relay CNR (strongest first) and the
    weakest one is peeled off repeatedly; the nested set with the largest
    gain wins, the smaller set on ties.
    """
    g_bk = ch.gamma_bk[n, k]
    eligible = [r for r in range(ch.shape[2]) if ch.gamma_br[n, r] > g_bk]
    current = list(_sorted_by_first_hop(eligible, n, ch))
    best_set, best_beta = (), 1.0
    while current:
        b = beta(current, k, n, ch)
        if b >= best_beta:
            best_set, best_beta = tuple(current), b
        current.pop()
    return _decision(k, n, ch, best_set, best_beta)


def best_relay_set_exhaustive(k: int, n: int, ch: ChannelRealization) -> VirtualLinkDecision:
    """Max-gain relay set by enumerating every subset of all L relays."""
    num_relays = ch.shape[2]
    best_set, best_beta = (), 1.0
    for size in range(1, num_relays + 1):
        for subset in combinations(range(num_relays), size):
            if min(ch.gamma_br[n, r] for r in subset) <= ch.gamma_bk[n, k]:
                continue
            b = beta(subset, k, n, ch)
            if b > best_beta:
                best_set, best_beta = subset, b
    return _decision(k, n, ch, best_set, best_beta)


def df_optimal_split(p_pair: float, decision: VirtualLinkDecision, ch: ChannelRealization) -> NodePowerSplit:
    """Split the pair budget ``p_pair`` over slot 1 and the slot-2 nodes.

    DF mode: the slot-1 BS power and the slot-2 pool equalize the two hop
    SNRs; the pool is shared over BS + relays in proportion to their CNR to
    the user (maximum-ratio transmission). Repetition mode: the BS sends at
    ``p_pair`` in both slots.
    """
    if not p_pair >= 0:
        raise ValueError("p_pair must be non-negative")
    k, n = decision.user, decision.subcarrier
    g_bk = float(ch.gamma_bk[n, k])
    if decision.rho == 0:
        return NodePowerSplit(float(p_pair), {BS: float(p_pair)})
    members = tuple(decision.relay_set)
    g_min = bottleneck_cnr(members, n, ch)
    if g_min <= g_bk:
        raise ValueError("DF mode needs every helping relay to hear the BS better than the user does")
    gains = {r: float(ch.gamma_rk[n, r, k]) for r in members}
    g_rel = sum(gains.values())
    p_b = 2.0 * p_pair * (g_rel + g_bk) / (g_min + g_rel)
    pool = 2.0 * p_pair * (g_min - g_bk) / (g_min + g_rel)
    g_miso = g_bk + g_rel
    nodes = {BS: pool * g_bk / g_miso}
    nodes.update({r: pool * g / g_miso for r, g in gains.items()})
    return NodePowerSplit(p_b, nodes)


def hop_snrs(split: NodePowerSplit, decision: VirtualLinkDecision, ch: ChannelRealization) -> tuple[float, float]:
    """(decodable SNR at the relays, combined SNR at the user) for a split.

    Slot-2 transmissions add coherently, so the MISO SNR is
    ``(sum_i sqrt(gamma_i P_i))**2``. Repetition mode has no relay hop and
    returns ``inf`` for the first entry.
    """
    k, n = decision.user, decision.subcarrier
    g_bk = float(ch.gamma_bk[n, k])
    amp = 0.0
    for node, p in split.p_nodes_slot2.items():
        g = g_bk if node == BS else float(ch.gamma_rk[n, node, k])
        amp += np.sqrt(g * p)
    user_snr = g_bk * split.p_b_slot1 + amp**2
    if not decision.relay_set:
        return float("inf"), float(user_snr)
    relay_snr = bottleneck_cnr(decision.relay_set, n, ch) * split.p_b_slot1
    return float(relay_snr), float(user_snr)


def split_rate(split: NodePowerSplit, decision: VirtualLinkDecision, ch: ChannelRealization, n_total: int) -> float:
    """DF rate of a split: the weaker of the two hops, in bit/s/Hz."""
    return float(np.log2(1.0 + min(hop_snrs(split, decision, ch))) / (2 * n_total))


def e2e_rate(upsilon, p_pair, n_total: int):
    """Virtual-link rate ``log2(1 + upsilon * P) / (2N)`` in bit/s/Hz."""
    return np.log2(1.0 + np.asarray(upsilon) * np.asarray(p_pair)) / (2 * n_total)


@dataclass(frozen=True)
class LinkTable:
    """Step-1 output for every (subcarrier, user) pair, stored as arrays.

    ``sets[n][k]`` is the helping relay set of the pair; it is empty in
    repetition mode.
    """

    beta: np.ndarray  # (N, K)
    rho: np.ndarray  # (N, K) int
    upsilon: np.ndarray  # (N, K)
    sets: tuple

    def relay_set(self, n: int, k: int) -> tuple[int, ...]:
        return self.sets[n][k]

    def decision(self, k: int, n: int) -> VirtualLinkDecision:
        return VirtualLinkDecision(
            k, n, self.sets[n][k], float(self.beta[n, k]), int(self.rho[n, k]), float(self.upsilon[n, k])
        )

    @classmethod
    def from_decisions(cls, decisions, num_sub: int, num_users: int) -> "LinkTable":
        """Pack an iterable of :class:`VirtualLinkDecision` covering every pair."""
        beta_tab = np.ones((num_sub, num_users))
        rho = np.zeros((num_sub, num_users), dtype=int)
        ups = np.full((num_sub, num_users), np.nan)
        sets = [[()] * num_users for _ in range(num_sub)]
        for d in decisions:
            beta_tab[d.subcarrier, d.user] = d.beta
            rho[d.subcarrier, d.user] = d.rho
            ups[d.subcarrier, d.user] = d.upsilon
            sets[d.subcarrier][d.user] = tuple(d.relay_set)
        if np.isnan(ups).any():
            raise ValueError("decisions do not cover every (subcarrier, user) pair")
        return cls(beta_tab, rho, ups, tuple(tuple(row) for row in sets))


def link_table(ch: ChannelRealization) -> LinkTable:
    """Vectorized :func:`select_relay_set` over all pairs."""
    num_sub, num_users, num_relays = ch.shape
    g_bk = ch.gamma_bk
    beta_tab = np.ones((num_sub, num_users))
    size = np.zeros((num_sub, num_users), dtype=int)
    order = np.zeros((num_sub, num_relays), dtype=int)
    if num_relays:
        # stable sort on the negated CNR keeps index order on ties
        order = np.argsort(-ch.gamma_br, axis=1, kind="stable")
        g_first = np.take_along_axis(ch.gamma_br, order, axis=1)  # (N, L) descending
        g_second = np.take_along_axis(ch.gamma_rk, order[:, :, None], axis=1)  # (N, L, K)
        g_rel = np.cumsum(g_second, axis=1)
        g_min = g_first[:, :, None]
        direct = g_bk[:, None, :]
        prefix_beta = beta_from_parts(g_min, g_rel, direct)
        prefix_beta = np.where(g_min > direct, prefix_beta, -np.inf)
        best = np.argmax(prefix_beta, axis=1)  # first max: smallest set on ties
        best_beta = np.take_along_axis(prefix_beta, best[:, None, :], axis=1)[:, 0, :]
        use = best_beta > 1.0
        beta_tab = np.where(use, best_beta, 1.0)
        size = np.where(use, best + 1, 0)
    rho = (size > 0).astype(int)
    order_rows = [tuple(int(r) for r in row) for row in order]
    sets = tuple(tuple(order_rows[n][: size[n, k]] for k in range(num_users)) for n in range(num_sub))
    return LinkTable(beta_tab, rho, 2.0 * beta_tab * g_bk, sets)
