"""Actor-critic networks, exact gradients, Adam, and obs normalization."""

from __future__ import annotations

import numpy as np

from .adam import DivergenceError, OptState, adam_step, clip_global_norm
from .checkpoint import load_checkpoint, save_checkpoint
from .distributions import (
    gaussian_dist,
    gaussian_entropy,
    gaussian_log_prob,
    sample_squashed,
    squashed_log_prob,
)
from .mlp import (
    Arch,
    ForwardCache,
    Grads,
    ModelParams,
    backward,
    forward,
    init_params,
    value_forward,
)
from .normalizer import Normalizer, norm_update_apply


def ac_forward(
    params_actor: ModelParams,
    params_critic: ModelParams,
    obs: np.ndarray,
    critic_obs: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic actor mean and critic value for a batch."""
    mean, _ = forward(params_actor, obs)
    value, _ = value_forward(params_critic, critic_obs)
    return mean, value


__all__ = [
    "Arch",
    "DivergenceError",
    "ForwardCache",
    "Grads",
    "ModelParams",
    "Normalizer",
    "OptState",
    "ac_forward",
    "adam_step",
    "backward",
    "clip_global_norm",
    "forward",
    "gaussian_dist",
    "gaussian_entropy",
    "gaussian_log_prob",
    "init_params",
    "load_checkpoint",
    "norm_update_apply",
    "sample_squashed",
    "save_checkpoint",
    "squashed_log_prob",
    "value_forward",
]
