"""End-to-end schemes: the proposed three-step allocation, the exhaustive
oracle, and the RandR-OPA / Beam-EPA baselines."""

from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass

import numpy as np

from relay_ee.channel import ChannelRealization, SystemConfig
from relay_ee.power import (
    InfeasibleBudget,
    PowerSolution,
    build_profile,
    find_delta_star,
)
from relay_ee.subcarrier import Assignment, assign_subcarriers
from relay_ee.virtual_link import (
    BS,
    LinkTable,
    NodePowerSplit,
    VirtualLinkDecision,
    beta_from_parts,
    best_relay_set_exhaustive,
    link_table,
)

log = logging.getLogger(__name__)

MAX_ITERATIONS = 5
PTRANS_RTOL = 1e-6
ORACLE_MAX_ASSIGNMENTS = 10**6
ORACLE_MAX_SUBSETS = 1024
EPA_GRID_POINTS = 48


class Scheme(str, enum.Enum):
    PROPOSED = "proposed"
    ORACLE = "oracle"
    RANDR_OPA = "randr-opa"
    BEAM_EPA = "beam-epa"


class GuardRailError(ValueError):
    """The exhaustive oracle was asked for a problem too large to enumerate."""


@dataclass
class RunResult:
    scheme: Scheme
    solution: PowerSolution
    assignment: Assignment
    links: LinkTable
    iterations: int
    converged: bool
    config: SystemConfig
    termination: str = "fixed_point"

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def ee(self) -> float:
        return self.solution.ee

    @property
    def decisions(self) -> list[list[VirtualLinkDecision]]:
        """N x K matrix of per-pair decisions."""
        n_sub, n_users = self.links.upsilon.shape
        return [[self.links.decision(k, n) for k in range(n_users)] for n in range(n_sub)]


def initial_transmit_power(config: SystemConfig) -> float:
    return (config.p_max_w - config.p_static_w) / config.eta


def _iterate(config, ch, links, scheme, *, select="argmin", max_iterations=MAX_ITERATIONS) -> RunResult:
    """Alternate subcarrier assignment and delta optimization.

    Starts from the assumption that the whole budget is radiated and feeds
    each solution's transmit power back into the assignment. Stops at a
    fixed point (the assignment reproduces the transmit power it was built
    for), or when the assignment repeats an earlier one: the delta step is
    deterministic, so a repeat can only replay a cycle. ``iterations``
    counts delta solves. Outside a fixed point the best visited solution is
    returned.
    """
    n_total = config.num_subcarriers
    p_assumed = initial_transmit_power(config)
    visited: dict = {}
    last_key = None
    termination = "cap"
    while True:
        assignment = assign_subcarriers(links.upsilon, p_assumed, config.alpha, select=select)
        key = assignment.key()
        if key in visited:
            termination = "fixed_point" if key == last_key else "cycle"
            break
        if len(visited) == max_iterations:
            break
        profile = build_profile(assignment, links.upsilon, config.alpha, n_total)
        try:
            solution = find_delta_star(profile, config, n_total, links, ch)
        except InfeasibleBudget:
            if not visited:
                raise
            log.info("reassignment at P_trans=%g W is infeasible", p_assumed)
            termination = "infeasible_reassignment"
            break
        visited[key] = (solution, assignment)
        last_key = key
        if abs(solution.p_trans - p_assumed) <= PTRANS_RTOL * p_assumed:
            termination = "fixed_point"
            break
        p_assumed = solution.p_trans

    if termination == "fixed_point":
        solution, assignment = visited[last_key]
    else:
        solution, assignment = max(visited.values(), key=lambda sa: sa[0].ee)
    converged = termination in ("fixed_point", "cycle")
    return RunResult(scheme, solution, assignment, links, len(visited), converged, config, termination)


def optimize(config: SystemConfig, ch: ChannelRealization, *, select: str = "argmin") -> RunResult:
    """Proposed scheme: relay sets, greedy assignment, optimal delta."""
    ch.check_matches(config)
    return _iterate(config, ch, link_table(ch), Scheme.PROPOSED, select=select)


def check_oracle_size(config: SystemConfig) -> None:
    n_sub, n_users, n_relays = config.num_subcarriers, config.num_users, config.num_relays
    if n_users**n_sub > ORACLE_MAX_ASSIGNMENTS or 2**n_relays > ORACLE_MAX_SUBSETS:
        raise GuardRailError(
            f"oracle needs K^N <= {ORACLE_MAX_ASSIGNMENTS} and 2^L <= {ORACLE_MAX_SUBSETS}; "
            f"got K^N = {n_users}^{n_sub}, 2^L = 2^{n_relays}. Use a desk-scale config such as N=4, K=2, L=5"
        )


def oracle(config: SystemConfig, ch: ChannelRealization) -> RunResult:
    """Exhaustive search over relay subsets and subcarrier partitions.

    Relay sets come from enumerating every subset per pair. Every partition
    of the subcarriers that leaves no user empty gets its own optimal delta;
    the best EE wins.
    """
    ch.check_matches(config)
    check_oracle_size(config)
    n_sub, n_users, n_relays = ch.shape
    decisions = [best_relay_set_exhaustive(k, n, ch) for n in range(n_sub) for k in range(n_users)]
    links = LinkTable.from_decisions(decisions, n_sub, n_users)

    best = None
    for owner in itertools.product(range(n_users), repeat=n_sub):
        owner = np.array(owner)
        if len(np.unique(owner)) < n_users:
            continue
        assignment = Assignment.from_owner(owner, np.zeros(n_users))
        profile = build_profile(assignment, links.upsilon, config.alpha, n_sub)
        try:
            solution = find_delta_star(profile, config, n_sub)
        except InfeasibleBudget:
            continue
        if best is None or solution.ee > best[0].ee:
            best = (solution, assignment, profile)
    if best is None:
        raise InfeasibleBudget("no subcarrier partition meets the power budget")
    solution, assignment, profile = best
    # rebuild with per-node splits for the winner only
    solution = find_delta_star(profile, config, n_sub, links, ch)
    return RunResult(Scheme.ORACLE, solution, assignment, links, 1, True, config, "single_pass")


def _baseline_rng(config: SystemConfig) -> np.random.Generator:
    # separate stream from the channel draw, same seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed, spawn_key=(1,))))


def random_relay_links(config: SystemConfig, ch: ChannelRealization) -> LinkTable:
    """One uniformly drawn relay per pair, used only if it beats the direct link."""
    n_sub, n_users, n_relays = ch.shape
    if n_relays < 1:
        raise ValueError("RandR-OPA needs at least one relay")
    pick = _baseline_rng(config).integers(0, n_relays, size=(n_sub, n_users))
    g_br = np.take_along_axis(ch.gamma_br, pick, axis=1)
    g_rk = np.take_along_axis(ch.gamma_rk, pick[:, None, :], axis=1)[:, 0, :]
    eligible = g_br > ch.gamma_bk
    beta_tab = np.where(eligible, beta_from_parts(g_br, g_rk, ch.gamma_bk), 1.0)
    sets = tuple(
        tuple((int(pick[n, k]),) if eligible[n, k] else () for k in range(n_users)) for n in range(n_sub)
    )
    return LinkTable(beta_tab, eligible.astype(int), 2.0 * beta_tab * ch.gamma_bk, sets)


def baseline_randr_opa(config: SystemConfig, ch: ChannelRealization) -> RunResult:
    """Random single relay per pair, then the proposed assignment and power steps."""
    ch.check_matches(config)
    return _iterate(config, ch, random_relay_links(config, ch), Scheme.RANDR_OPA)


def equal_split_cnr(links: LinkTable, ch: ChannelRealization) -> np.ndarray:
    """(N, K) effective CNR of each pair under equal power splitting.

    Slot 1 and slot 2 get equal energy, so the BS sends at the pair power P
    in slot 1 and the slot-2 nodes share P equally. Coherent slot-2 SNR is
    ``(sum_i sqrt(gamma_i P_i))**2``; the rate is set by the weaker hop and
    both hops scale linearly in P.
    """
    g_bk = ch.gamma_bk
    n_sub, n_users = g_bk.shape
    eff = 2.0 * g_bk.copy()
    for n in range(n_sub):
        for k in range(n_users):
            members = links.sets[n][k]
            if not members:
                continue
            idx = list(members)
            g_min = ch.gamma_br[n, idx].min()
            amp = np.sqrt(g_bk[n, k]) + np.sqrt(ch.gamma_rk[n, idx, k]).sum()
            user = g_bk[n, k] + amp**2 / (len(members) + 1)
            eff[n, k] = min(g_min, user)
    return eff


def _equal_split(p_pair: float, members) -> NodePowerSplit:
    share = p_pair / (len(members) + 1)
    nodes = {BS: share}
    nodes.update({r: share for r in members})
    return NodePowerSplit(p_pair, nodes)


def baseline_beam_epa(
    config: SystemConfig, ch: ChannelRealization, *, grid_points: int = EPA_GRID_POINTS
) -> RunResult:
    """Relay beamforming with equal power everywhere.

    Relay sets come from the proposed selection. Every subcarrier gets
    ``P_trans / N``, each pair splits it equally between the slots and among
    the slot-2 nodes, and the assignment uses the resulting CNRs. ``P_trans``
    is picked from a uniform grid on ``(0, (P_max - P_static) / eta]`` to
    maximize EE within the budget. Rates are only roughly proportional, so
    the reported delta is ``min_k R_k / alpha_k``.
    """
    ch.check_matches(config)
    links = link_table(ch)
    eff = equal_split_cnr(links, ch)
    n_sub = config.num_subcarriers
    alpha = np.asarray(config.alpha)
    p_hi = initial_transmit_power(config)

    best = None
    for p in p_hi * np.arange(1, grid_points + 1) / grid_points:
        assignment = assign_subcarriers(eff, p, alpha)
        owner = assignment.owner
        pair_rate = np.log2(1.0 + eff[np.arange(n_sub), owner] * p / n_sub) / (2 * n_sub)
        rates = np.bincount(owner, weights=pair_rate, minlength=config.num_users)
        sum_rate = rates.sum()
        p_total = config.eta * p + config.p_static_w + config.xi * sum_rate
        if p_total > config.p_max_w:
            continue
        ee = sum_rate / p_total
        if best is None or ee > best[0]:
            best = (ee, p, assignment, rates, p_total)
    if best is None:
        raise InfeasibleBudget("no grid power meets the budget")
    ee, p, assignment, rates, p_total = best
    owner = assignment.owner
    p_n = np.full(n_sub, p / n_sub)
    splits = {(int(k), n): _equal_split(p_n[n], links.sets[n][k]) for n, k in enumerate(owner)}
    solution = PowerSolution(
        delta=float(np.min(rates / alpha)),
        p_n=p_n,
        rates=rates,
        p_trans=float(p),
        p_total=float(p_total),
        ee=float(ee),
        budget_binding=bool(p_total >= config.p_max_w * (1 - 1e-9)),
        owner=owner,
        splits=splits,
    )
    return RunResult(Scheme.BEAM_EPA, solution, assignment, links, 1, True, config, "single_pass")


SCHEMES = {
    Scheme.PROPOSED: optimize,
    Scheme.ORACLE: oracle,
    Scheme.RANDR_OPA: baseline_randr_opa,
    Scheme.BEAM_EPA: baseline_beam_epa,
}


def run_scheme(scheme, config: SystemConfig, ch: ChannelRealization) -> RunResult:
    return SCHEMES[Scheme(scheme)](config, ch)
