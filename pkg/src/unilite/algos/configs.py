"""Algorithm hyperparameter records with their global defaults."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class PpoConfig:
    clip_param: float = 0.2
    entropy_coef: float = 0.01
    value_loss_coef: float = 1.0
    use_clipped_value_loss: bool = True
    epochs: int = 5
    minibatches: int = 4
    lr: float = 1e-3
    schedule: str = "adaptive"  # fixed | adaptive
    gamma: float = 0.99
    lam: float = 0.95
    desired_kl: float = 0.01
    max_grad_norm: float = 1.0
    adaptive_kl_beta: float = 0.9
    adaptive_lr_growth: float = 1.1
    adaptive_lr_decay: float = 1.2
    adaptive_lr_update_interval: int = 5

    def __post_init__(self) -> None:
        if self.clip_param <= 0:
            raise ValueError("clip_param must be positive")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        if not 0 <= self.lam <= 1:
            raise ValueError("lam must be in [0, 1]")
        if self.adaptive_lr_growth < 1 or self.adaptive_lr_decay < 1:
            raise ValueError("adaptive lr factors must be >= 1")
        if self.schedule not in ("fixed", "adaptive"):
            raise ValueError("schedule must be 'fixed' or 'adaptive'")


@dataclass
class AppoConfig(PpoConfig):
    vtrace_clip_rho: float = 1.0
    vtrace_clip_c: float = 1.0
    replay_queue_size: int = 4  # rollout ring capacity, in segments

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.vtrace_clip_rho <= 0 or self.vtrace_clip_c <= 0:
            raise ValueError("vtrace clips must be positive")
        if self.replay_queue_size < 1:
            raise ValueError("replay_queue_size must be >= 1")


@dataclass
class SacConfig:
    gamma: float = 0.97
    tau: float = 0.125
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    alpha_lr: float = 3e-4
    alpha_init: float = 0.01
    target_entropy_ratio: float = 0.0
    batch_size: int = 8192
    updates_per_step: int = 4
    policy_frequency: int = 4
    learning_starts: int = 1
    n_step: int = 1
    normalize_reward: bool = False
    normalized_g_max: float = 5.0
    max_grad_norm: float = 0.0
    replay_buffer_n: int = 512  # ring capacity in per-env steps
    obs_normalization: bool = True

    def __post_init__(self) -> None:
        if not 0 < self.tau <= 1:
            raise ValueError("tau must be in (0, 1]")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.n_step < 1:
            raise ValueError("n_step must be >= 1")


def flashsac_defaults() -> SacConfig:
    """SAC deltas used by the accelerated variant: n-step packing on, reward
    normalization on, softer target updates, smaller batches."""
    return SacConfig(
        tau=0.01,
        batch_size=2048,
        updates_per_step=2,
        policy_frequency=2,
        learning_starts=98,
        n_step=1,
        normalize_reward=True,
        obs_normalization=False,
    )
