"""Clipped-surrogate PPO update with exact manual gradients.

Loss per minibatch, with advantages normalized once per update over the
whole batch:

  ratio  = exp(logp_new - behavior_logp)
  policy = -mean(min(ratio*A, clip(ratio, 1-eps, 1+eps)*A))
  value  = mean(max((V-R)^2, (V_clip-R)^2))        (clipped variant)
  total  = policy + value_loss_coef*value - entropy_coef*entropy

The min/max branches route gradients to the unclipped side on ties, which
is where every sample starts on the first epoch (ratio == 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..tensornet import (
    DivergenceError,
    Grads,
    ModelParams,
    OptState,
    adam_step,
    backward,
    clip_global_norm,
    forward,
    gaussian_entropy,
    gaussian_log_prob,
    value_forward,
)
from .configs import PpoConfig
from .segment import RolloutSegment, UpdateStats


@dataclass
class AcParams:
    """Actor and critic parameter records updated together."""

    actor: ModelParams
    critic: ModelParams

    def copy(self) -> "AcParams":
        return AcParams(self.actor.copy(), self.critic.copy())


@dataclass
class AcOpt:
    actor: OptState
    critic: OptState

    @classmethod
    def for_params(cls, params: AcParams, lr: float) -> "AcOpt":
        return cls(
            OptState.for_params(params.actor, lr),
            OptState.for_params(params.critic, lr),
        )

    @property
    def lr(self) -> float:
        return self.actor.lr

    def set_lr(self, lr: float) -> None:
        self.actor.lr = lr
        self.critic.lr = lr


def ppo_loss_and_grads(
    params: AcParams,
    obs: np.ndarray,
    critic_obs: np.ndarray,
    actions: np.ndarray,
    behavior_logp: np.ndarray,
    advantages: np.ndarray,
    returns: np.ndarray,
    old_values: np.ndarray,
    cfg: PpoConfig,
) -> tuple[dict, Grads, Grads]:
    """Total PPO loss terms plus exact actor/critic gradients."""
    n = obs.shape[0]
    eps = cfg.clip_param

    mean, a_cache = forward(params.actor, obs)
    log_std = params.actor.log_std
    logp = gaussian_log_prob(mean, log_std, actions)
    ratio = np.exp(logp - behavior_logp)

    surr_unclipped = ratio * advantages
    surr_clipped = np.clip(ratio, 1 - eps, 1 + eps) * advantages
    policy_loss = -float(np.mean(np.minimum(surr_unclipped, surr_clipped)))
    unclipped_active = surr_unclipped <= surr_clipped
    dlogp = np.where(unclipped_active, -advantages * ratio / n, 0.0)

    std = np.exp(log_std)
    z = (actions - mean) / std
    dmean = dlogp[:, None] * z / std
    dlog_std = (dlogp[:, None] * (z * z - 1.0)).sum(axis=0)

    entropy = float(gaussian_entropy(log_std))
    dlog_std = dlog_std - cfg.entropy_coef  # d(-coef*mean(H))/dlog_std = -coef

    _, actor_grads = backward(params.actor, a_cache, dmean)
    actor_grads.log_std += dlog_std.astype(actor_grads.log_std.dtype)

    v_pred, c_cache = value_forward(params.critic, critic_obs)
    if cfg.use_clipped_value_loss:
        v_clipped = old_values + np.clip(v_pred - old_values, -eps, eps)
        loss_unclipped = (v_pred - returns) ** 2
        loss_clipped = (v_clipped - returns) ** 2
        value_loss = float(np.mean(np.maximum(loss_unclipped, loss_clipped)))
        dv = np.where(loss_unclipped >= loss_clipped,
                      2.0 * (v_pred - returns) / n, 0.0)
    else:
        value_loss = float(np.mean((v_pred - returns) ** 2))
        dv = 2.0 * (v_pred - returns) / n
    dv = dv * cfg.value_loss_coef
    _, critic_grads = backward(params.critic, c_cache, dv[:, None])

    total = policy_loss + cfg.value_loss_coef * value_loss - cfg.entropy_coef * entropy
    terms = {
        "policy_loss": policy_loss,
        "value_loss": value_loss,
        "entropy": entropy,
        "total": total,
        "kl": float(np.mean(behavior_logp - logp)),
    }
    return terms, actor_grads, critic_grads


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    return (advantages - advantages.mean()) / (advantages.std() + 1e-8)


def run_epochs(
    params: AcParams,
    opt: AcOpt,
    cfg: PpoConfig,
    rng: np.random.Generator,
    obs: np.ndarray,
    critic_obs: np.ndarray,
    actions: np.ndarray,
    behavior_logp: np.ndarray,
    advantages: np.ndarray,
    returns: np.ndarray,
    old_values: np.ndarray,
) -> UpdateStats:
    """The shared epoch/minibatch loop used by both PPO and APPO updates."""
    n = obs.shape[0]
    if n % cfg.minibatches != 0:
        raise ValueError(
            f"minibatches {cfg.minibatches} must divide batch size {n}"
        )
    mb_size = n // cfg.minibatches
    advantages = normalize_advantages(advantages)

    sums = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0}
    kl_per_epoch = []
    grad_norm_last = 0.0
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        kl_last = 0.0
        for k in range(cfg.minibatches):
            idx = perm[k * mb_size : (k + 1) * mb_size]
            terms, actor_grads, critic_grads = ppo_loss_and_grads(
                params,
                obs[idx],
                critic_obs[idx],
                actions[idx],
                behavior_logp[idx],
                advantages[idx],
                returns[idx],
                old_values[idx],
                cfg,
            )
            if not np.isfinite(terms["total"]):
                raise DivergenceError(
                    f"non-finite PPO loss: {terms}"
                )
            grad_norm_last = clip_global_norm(
                [actor_grads, critic_grads], cfg.max_grad_norm
            )
            adam_step(params.actor, actor_grads, opt.actor)
            adam_step(params.critic, critic_grads, opt.critic)
            for key in sums:
                sums[key] += terms[key]
            kl_last = terms["kl"]
        kl_per_epoch.append(kl_last)

    n_batches = cfg.epochs * cfg.minibatches
    return UpdateStats(
        policy_loss=sums["policy_loss"] / n_batches,
        value_loss=sums["value_loss"] / n_batches,
        entropy=sums["entropy"] / n_batches,
        kl=float(np.mean(kl_per_epoch)),
        lr=opt.lr,
        grad_norm=grad_norm_last,
    )


def ppo_update(
    segment: RolloutSegment,
    params: AcParams,
    opt: AcOpt,
    cfg: PpoConfig,
    rng: np.random.Generator,
) -> UpdateStats:
    """Epochs x minibatches of clipped-surrogate updates on one segment.

    The segment must already carry advantages and returns (see
    :func:`unilite.algos.gae`).
    """
    if segment.advantages is None or segment.returns is None:
        raise ValueError("segment advantages/returns not computed")
    flat = lambda arr: arr.reshape(-1, *arr.shape[2:])
    return run_epochs(
        params,
        opt,
        cfg,
        rng,
        flat(segment.obs),
        flat(segment.critic_obs),
        flat(segment.actions),
        segment.behavior_log_prob.reshape(-1),
        segment.advantages.reshape(-1),
        segment.returns.reshape(-1),
        segment.values.reshape(-1),
    )


def adaptive_lr_step(
    lr: float, measured_kl: float, cfg: PpoConfig, update_index: int
) -> float:
    """Dead-band adaptive learning rate, evaluated every
    adaptive_lr_update_interval updates.

    kl above desired_kl/beta shrinks lr by the decay factor; kl below
    desired_kl*beta grows it; in between it is left alone. Clamped to
    [1e-6, 1e-2].
    """
    if cfg.schedule != "adaptive":
        return lr
    if update_index % cfg.adaptive_lr_update_interval != 0:
        return lr
    if measured_kl > cfg.desired_kl / cfg.adaptive_kl_beta:
        lr = lr / cfg.adaptive_lr_decay
    elif measured_kl < cfg.desired_kl * cfg.adaptive_kl_beta:
        lr = lr * cfg.adaptive_lr_growth
    return float(np.clip(lr, 1e-6, 1e-2))
