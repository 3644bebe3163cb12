"""Greedy subcarrier assignment under equal power with rate-proportional steering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from relay_ee.virtual_link import e2e_rate


@dataclass(frozen=True)
class Assignment:
    sets: tuple[tuple[int, ...], ...]  # S_k, in the order subcarriers were granted
    rates_equal_power: np.ndarray  # (K,) bit/s/Hz

    @property
    def num_users(self) -> int:
        return len(self.sets)

    @property
    def num_subcarriers(self) -> int:
        return sum(len(s) for s in self.sets)

    @property
    def theta(self) -> np.ndarray:
        """(N, K) 0/1 matrix, ``theta[n, k] == 1`` iff n is assigned to k."""
        theta = np.zeros((self.num_subcarriers, self.num_users), dtype=int)
        for k, s in enumerate(self.sets):
            theta[list(s), k] = 1
        return theta

    @property
    def owner(self) -> np.ndarray:
        """(N,) user index of each subcarrier."""
        owner = np.empty(self.num_subcarriers, dtype=int)
        for k, s in enumerate(self.sets):
            owner[list(s)] = k
        return owner

    def key(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(sorted(s)) for s in self.sets)

    @classmethod
    def from_owner(cls, owner, rates=None) -> "Assignment":
        owner = np.asarray(owner)
        num_users = int(owner.max()) + 1 if rates is None else len(rates)
        sets = tuple(tuple(int(n) for n in np.flatnonzero(owner == k)) for k in range(num_users))
        if rates is None:
            rates = np.zeros(num_users)
        return cls(sets, np.asarray(rates, dtype=float))


def equal_power_rate(upsilon_kn, p_trans: float, n_total: int):
    """Rate of a virtual link that gets the equal share ``p_trans / N``."""
    if np.any(np.asarray(upsilon_kn) <= 0) or not p_trans > 0:
        raise ValueError("equal_power_rate needs positive CNR and power")
    return e2e_rate(upsilon_kn, p_trans / n_total, n_total)


def assign_subcarriers(upsilon, p_trans: float, alpha, *, select: str = "argmin") -> Assignment:
    """Assign every subcarrier to exactly one user.

    Each user first takes its best subcarrier (users in index order). Then,
    until none remain, the user with the smallest ``R_k / alpha_k`` takes its
    best remaining subcarrier. Ties go to the lowest user index and the
    lowest subcarrier index.

    ``select="argmax"`` hands each remaining subcarrier to the user with the
    largest ``R_k / alpha_k`` instead; it starves weak users and exists only
    for comparison.
    """
    upsilon = np.asarray(upsilon, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    num_sub, num_users = upsilon.shape
    if num_sub < num_users:
        raise ValueError(f"N={num_sub} subcarriers cannot serve K={num_users} users")
    if select not in ("argmin", "argmax"):
        raise ValueError(f"unknown select rule {select!r}")
    rate = equal_power_rate(upsilon, p_trans, num_sub)  # (N, K)

    free = np.ones(num_sub, dtype=bool)
    sets: list[list[int]] = [[] for _ in range(num_users)]
    total = np.zeros(num_users)

    def grant(k):
        masked = np.where(free, rate[:, k], -np.inf)
        n = int(np.argmax(masked))
        free[n] = False
        sets[k].append(n)
        total[k] += rate[n, k]

    for k in range(num_users):
        grant(k)
    pick = np.argmin if select == "argmin" else np.argmax
    for _ in range(num_sub - num_users):
        grant(int(pick(total / alpha)))
    return Assignment(tuple(tuple(s) for s in sets), total)
