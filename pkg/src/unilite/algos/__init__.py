"""Update mathematics: GAE, clipped PPO, V-trace APPO, SAC, n-step packing."""

from .appo import appo_update
from .configs import AppoConfig, PpoConfig, SacConfig, flashsac_defaults
from .estimators import (
    NStepPacker,
    ReturnStdNormalizer,
    gae,
    nstep_and_reward_norm,
    vtrace,
)
from .ppo import (
    AcOpt,
    AcParams,
    adaptive_lr_step,
    normalize_advantages,
    ppo_loss_and_grads,
    ppo_update,
)
from .sac import (
    SacParams,
    SacState,
    ScalarAdam,
    actor_loss_and_grads,
    alpha_loss_and_grad,
    critic_loss_and_grads,
    critic_target,
    sac_update,
    soft_update,
)
from .segment import RolloutSegment, UpdateStats

__all__ = [
    "AcOpt",
    "AcParams",
    "AppoConfig",
    "NStepPacker",
    "PpoConfig",
    "ReturnStdNormalizer",
    "RolloutSegment",
    "SacConfig",
    "SacParams",
    "SacState",
    "ScalarAdam",
    "UpdateStats",
    "actor_loss_and_grads",
    "adaptive_lr_step",
    "alpha_loss_and_grad",
    "appo_update",
    "critic_loss_and_grads",
    "critic_target",
    "flashsac_defaults",
    "gae",
    "normalize_advantages",
    "nstep_and_reward_norm",
    "ppo_loss_and_grads",
    "ppo_update",
    "sac_update",
    "soft_update",
    "vtrace",
]
