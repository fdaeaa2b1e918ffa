"""Fixed-horizon rollout data and update statistics records."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class RolloutSegment:
    """On-policy rollout over (T, B) with behavior-policy log-probs.

    ``truncation_values`` holds V(final observation) at truncated steps
    (zeros elsewhere) so estimators can bootstrap through episode limits;
    ``bootstrap_value`` is V(s_T) per env.

    ``advantages`` / ``returns`` are filled by the advantage estimator
    before a PPO update consumes the segment.
    """

    obs: np.ndarray
    critic_obs: np.ndarray
    actions: np.ndarray
    behavior_log_prob: np.ndarray
    rewards: np.ndarray
    terminated: np.ndarray
    truncated: np.ndarray
    values: np.ndarray
    bootstrap_value: np.ndarray
    truncation_values: np.ndarray | None = None
    behavior_version: int = 0
    seq: int = 0
    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None

    def __post_init__(self) -> None:
        t, b = self.rewards.shape
        expect_tb = {
            "behavior_log_prob": self.behavior_log_prob,
            "terminated": self.terminated,
            "truncated": self.truncated,
            "values": self.values,
        }
        for name, arr in expect_tb.items():
            if arr.shape != (t, b):
                raise ValueError(f"{name} shape {arr.shape} != ({t}, {b})")
        if self.obs.shape[:2] != (t, b) or self.actions.shape[:2] != (t, b):
            raise ValueError("obs/actions leading dims must be (T, B)")
        if self.bootstrap_value.shape != (b,):
            raise ValueError("bootstrap_value must be (B,)")
        if not np.all(np.isfinite(self.behavior_log_prob)):
            raise ValueError("behavior_log_prob must be finite")

    @property
    def horizon(self) -> int:
        return self.rewards.shape[0]

    @property
    def n_envs(self) -> int:
        return self.rewards.shape[1]


@dataclass
class UpdateStats:
    """Loss terms and bookkeeping from one learner update."""

    policy_loss: float = 0.0
    value_loss: float = 0.0
    entropy: float = 0.0
    kl: float = 0.0
    lr: float = 0.0
    grad_norm: float = 0.0
    staleness: int = 0
    extra: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        row = {
            "policy_loss": self.policy_loss,
            "value_loss": self.value_loss,
            "entropy": self.entropy,
            "kl": self.kl,
            "lr": self.lr,
            "grad_norm": self.grad_norm,
            "staleness": self.staleness,
        }
        row.update(self.extra)
        return row
