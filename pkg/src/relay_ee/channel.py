"""Scenario configuration and seeded Rayleigh-fading channel realizations.

All channel quantities are channel-gain-to-noise ratios (CNR) per Watt of
transmit power on one subcarrier. Three tensors describe one fading block:

- ``gamma_bk[n, k]``: BS -> user k
- ``gamma_br[n, r]``: BS -> relay r
- ``gamma_rk[n, r, k]``: relay r -> user k
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

SPEC_VERSION = 1
RNG_NAME = "numpy.PCG64"


class ConfigError(ValueError):
    """Raised when a scenario configuration violates its invariants."""


@dataclass(frozen=True)
class SystemConfig:
    bandwidth_hz: float = 1e6
    num_subcarriers: int = 4
    num_users: int = 2
    num_relays: int = 5
    # chosen so that (W/N) * N0 == 1 for the default N=4
    noise_psd: float = 4e-6
    avg_cnr_db: float = 10.0
    p_max_w: float = 1.0
    p_static_w: float = 0.2
    # W per (bit/s/Hz) of sum rate
    xi: float = 0.0
    eta: float = 0.38
    alpha: tuple[float, ...] = (1.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        self.validate()

    def validate(self) -> None:
        if not self.bandwidth_hz > 0:
            raise ConfigError("bandwidth_hz must be positive")
        if self.num_subcarriers < 1 or self.num_users < 1 or self.num_relays < 0:
            raise ConfigError("need N >= 1, K >= 1, L >= 0")
        if self.num_subcarriers < self.num_users:
            raise ConfigError(
                f"N={self.num_subcarriers} < K={self.num_users}: every user needs a subcarrier"
            )
        if not self.noise_psd > 0:
            raise ConfigError("noise_psd must be positive")
        if not np.isfinite(self.avg_cnr_db):
            raise ConfigError("avg_cnr_db must be finite")
        if len(self.alpha) != self.num_users:
            raise ConfigError(f"alpha has {len(self.alpha)} entries, expected K={self.num_users}")
        if any(not a > 0 for a in self.alpha):
            raise ConfigError("all alpha_k must be positive")
        if self.p_static_w < 0 or self.xi < 0:
            raise ConfigError("p_static_w and xi must be non-negative")
        if not self.eta > 0:
            raise ConfigError("eta must be positive")
        if not self.p_max_w > self.p_static_w:
            raise ConfigError("p_max_w must exceed p_static_w")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    @property
    def avg_cnr(self) -> float:
        return 10.0 ** (self.avg_cnr_db / 10.0)

    @property
    def subcarrier_bandwidth(self) -> float:
        return self.bandwidth_hz / self.num_subcarriers

    def replace(self, **changes) -> "SystemConfig":
        """Return a copy with ``changes`` applied (and re-validated).

        Changing ``num_users`` without a matching ``alpha`` resets the weights
        to all-ones.
        """
        if "num_users" in changes and "alpha" not in changes:
            if changes["num_users"] != self.num_users:
                changes["alpha"] = (1.0,) * int(changes["num_users"])
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["alpha"] = list(self.alpha)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SystemConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        d = dict(d)
        if "alpha" in d:
            d["alpha"] = tuple(d["alpha"])
        elif "num_users" in d:
            d["alpha"] = (1.0,) * int(d["num_users"])
        for name in ("num_subcarriers", "num_users", "num_relays", "seed"):
            if name in d:
                d[name] = int(d[name])
        return cls(**d)


@dataclass(frozen=True)
class ChannelRealization:
    gamma_bk: np.ndarray  # (N, K)
    gamma_br: np.ndarray  # (N, L)
    gamma_rk: np.ndarray  # (N, L, K)
    rng: str = field(default=RNG_NAME, compare=False)

    def __post_init__(self):
        for name in ("gamma_bk", "gamma_br", "gamma_rk"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
        n, k = self.gamma_bk.shape
        if self.gamma_br.ndim != 2 or self.gamma_br.shape[0] != n:
            raise ConfigError("gamma_br must have shape (N, L)")
        l = self.gamma_br.shape[1]
        if self.gamma_rk.shape != (n, l, k):
            raise ConfigError(f"gamma_rk must have shape {(n, l, k)}, got {self.gamma_rk.shape}")
        for name in ("gamma_bk", "gamma_br", "gamma_rk"):
            arr = getattr(self, name)
            if not (np.all(np.isfinite(arr)) and np.all(arr > 0)):
                raise ConfigError(f"{name} entries must be strictly positive and finite")

    @property
    def shape(self) -> tuple[int, int, int]:
        """(N, K, L)"""
        n, k = self.gamma_bk.shape
        return n, k, self.gamma_br.shape[1]

    def check_matches(self, config: SystemConfig) -> None:
        expected = (config.num_subcarriers, config.num_users, config.num_relays)
        if self.shape != expected:
            raise ConfigError(f"channel shape (N, K, L)={self.shape} does not match config {expected}")

    def __eq__(self, other):
        if not isinstance(other, ChannelRealization):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, a), getattr(other, a))
            for a in ("gamma_bk", "gamma_br", "gamma_rk")
        )


def draw_channels(config: SystemConfig) -> ChannelRealization:
    """Draw i.i.d. exponential CNRs with mean ``10**(avg_cnr_db/10)``.

    Draw order is fixed (BS->user, BS->relay, relay->user), each in C order,
    so a given (config, seed) always yields the same tensors.
    """
    config.validate()
    rng = np.random.Generator(np.random.PCG64(config.seed))
    n, k, l = config.num_subcarriers, config.num_users, config.num_relays
    mean = config.avg_cnr

    def draw(shape):
        x = rng.exponential(mean, size=shape)
        # an exact zero is possible in principle; keep the tensor strictly positive
        return np.maximum(x, np.finfo(float).tiny)

    return ChannelRealization(draw((n, k)), draw((n, l)), draw((n, l, k)))


class Cnr(NamedTuple):
    value: float
    degenerate: bool


def cnr_from_coefficient(h_mag_sq: float, config: SystemConfig) -> Cnr:
    """CNR of a subchannel, ``|h|^2 / ((W/N) N0)``.

    A zero gain gives ``Cnr(0.0, degenerate=True)``; callers that need a
    positive CNR must reject it.
    """
    if h_mag_sq < 0:
        raise ValueError("h_mag_sq must be non-negative")
    value = h_mag_sq / (config.subcarrier_bandwidth * config.noise_psd)
    return Cnr(float(value), value == 0)


def channel_to_dict(config: SystemConfig, ch: ChannelRealization) -> dict:
    ch.check_matches(config)
    return {
        "spec_version": SPEC_VERSION,
        "config": config.to_dict(),
        "rng": ch.rng,
        "gamma_bk": ch.gamma_bk.ravel().tolist(),
        "gamma_br": ch.gamma_br.ravel().tolist(),
        "gamma_rk": ch.gamma_rk.ravel().tolist(),
    }


def channel_from_dict(doc: dict) -> tuple[SystemConfig, ChannelRealization]:
    if doc.get("spec_version") != SPEC_VERSION:
        raise ConfigError(f"unsupported spec_version {doc.get('spec_version')!r}")
    config = SystemConfig.from_dict(doc["config"])
    n, k, l = config.num_subcarriers, config.num_users, config.num_relays
    try:
        ch = ChannelRealization(
            np.array(doc["gamma_bk"], dtype=float).reshape(n, k),
            np.array(doc["gamma_br"], dtype=float).reshape(n, l),
            np.array(doc["gamma_rk"], dtype=float).reshape(n, l, k),
            rng=doc.get("rng", RNG_NAME),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"malformed channel file: {exc}") from exc
    return config, ch


def save_channels(path, config: SystemConfig, ch: ChannelRealization) -> None:
    text = json.dumps(channel_to_dict(config, ch), indent=1)
    Path(path).write_text(text + "\n")


def load_channels(path) -> tuple[SystemConfig, ChannelRealization]:
    return channel_from_dict(json.loads(Path(path).read_text()))
