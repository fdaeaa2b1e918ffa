"""Task and domain-randomization configuration records."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class DRConfig:
    """Domain-randomization switches and ranges for one task.

    A reset-field range of None disables that field entirely (absent from
    payloads); a degenerate [x, x] range keeps the field active with a
    constant value.
    """

    reset_mass_delta_range: tuple[float, float] | None = None
    reset_com_offset_range: tuple[float, float] | None = None
    push_enabled: bool = False
    push_interval_steps: int = 625
    push_max_delta_v: tuple[float, ...] = (0.5, 0.5)
    obs_noise_level: float = 1.0

    def validate(self) -> None:
        for name in ("reset_mass_delta_range", "reset_com_offset_range"):
            rng = getattr(self, name)
            if rng is not None and rng[0] > rng[1]:
                raise ValueError(f"{name}: lo {rng[0]} > hi {rng[1]}")
        if self.push_enabled and self.push_interval_steps < 1:
            raise ValueError("push_interval_steps must be >= 1 when push is enabled")
        if self.obs_noise_level < 0:
            raise ValueError("obs_noise_level must be >= 0")


@dataclass
class TaskConfig:
    """Physics timing, command space, reward weights, and termination bounds.

    dt_ctrl = decimation * dt_sim; episode_length_s must be a whole number of
    control steps.
    """

    dt_sim: float = 0.01
    decimation: int = 2
    episode_length_s: float = 4.0
    command_low: tuple[float, ...] = (-0.6, -0.4)
    command_high: tuple[float, ...] = (1.0, 0.4)
    reward_weights: dict[str, float] = field(
        default_factory=lambda: {"track": 1.0, "action_rate": -0.005}
    )
    tracking_sigma: float = 0.25
    termination_speed_max: float = 3.0
    obs_noise_scale: float = 0.01
    action_scale: float = 2.0
    dr: DRConfig = field(default_factory=DRConfig)

    def __post_init__(self) -> None:
        if self.dt_sim <= 0:
            raise ValueError("dt_sim must be positive")
        if self.decimation < 1:
            raise ValueError("decimation must be >= 1")
        if self.tracking_sigma <= 0:
            raise ValueError("tracking_sigma must be positive")
        n_steps = self.episode_length_s / self.dt_ctrl
        if abs(n_steps - round(n_steps)) > 1e-9:
            raise ValueError(
                f"episode_length_s {self.episode_length_s} is not a whole number "
                f"of control steps (dt_ctrl={self.dt_ctrl})"
            )
        lo = np.asarray(self.command_low, dtype=np.float64)
        hi = np.asarray(self.command_high, dtype=np.float64)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("command_low must be elementwise <= command_high")
        if "track" not in self.reward_weights or "action_rate" not in self.reward_weights:
            raise ValueError("reward_weights must contain 'track' and 'action_rate'")
        self.dr.validate()

    @property
    def dt_ctrl(self) -> float:
        return self.decimation * self.dt_sim

    @property
    def episode_length(self) -> int:
        """Episode limit in control steps."""
        return round(self.episode_length_s / self.dt_ctrl)
