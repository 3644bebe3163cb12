"""Energy-efficient resource allocation for multi-relay OFDM downlinks with
decode-and-forward relay beamforming and proportional rate fairness."""

from relay_ee.channel import ChannelRealization, ConfigError, SystemConfig, draw_channels, load_channels, save_channels
from relay_ee.pipeline import GuardRailError, RunResult, Scheme, optimize, oracle, run_scheme
from relay_ee.power import DomainError, InfeasibleBudget, PowerSolution

__all__ = [
    "ChannelRealization",
    "ConfigError",
    "DomainError",
    "GuardRailError",
    "InfeasibleBudget",
    "PowerSolution",
    "RunResult",
    "Scheme",
    "SystemConfig",
    "draw_channels",
    "load_channels",
    "optimize",
    "oracle",
    "run_scheme",
    "save_channels",
]
