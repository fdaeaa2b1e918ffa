"""Soft actor-critic update: twin Q with min-backup, tanh-squashed actor,
automatic entropy temperature, n-step-aware targets.

Critic target per row (a' drawn from the current actor at the next obs):

  y = R_n + gamma^n_used * (1 - term) * (min(Q1t, Q2t)(s', a') - alpha*logpi(a'|s'))

Every ``policy_frequency`` critic updates the actor minimizes
mean(alpha*logpi(a|s) - min Q(s, a)) through the reparameterized sample,
and log_alpha descends -log_alpha * mean(logpi + target_entropy).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..tensornet import (
    DivergenceError,
    ModelParams,
    OptState,
    adam_step,
    backward,
    forward,
    sample_squashed,
    value_forward,
)
from .configs import SacConfig
from .segment import UpdateStats

_SQUASH_EPS = 1e-6


@dataclass
class ScalarAdam:
    lr: float
    m: float = 0.0
    v: float = 0.0
    t: int = 0
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8

    def step(self, x: float, g: float) -> float:
        if not np.isfinite(g):
            raise DivergenceError("non-finite gradient in ScalarAdam")
        self.t += 1
        b1, b2 = self.betas
        self.m = b1 * self.m + (1 - b1) * g
        self.v = b2 * self.v + (1 - b2) * g * g
        m_hat = self.m / (1 - b1**self.t)
        v_hat = self.v / (1 - b2**self.t)
        return x - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class SacParams:
    actor: ModelParams
    q1: ModelParams
    q2: ModelParams
    q1_targ: ModelParams
    q2_targ: ModelParams
    log_alpha: float

    def copy(self) -> "SacParams":
        return SacParams(
            self.actor.copy(), self.q1.copy(), self.q2.copy(),
            self.q1_targ.copy(), self.q2_targ.copy(), self.log_alpha,
        )


@dataclass
class SacState:
    params: SacParams
    actor_opt: OptState
    q1_opt: OptState
    q2_opt: OptState
    alpha_opt: ScalarAdam
    action_dim: int
    update_count: int = 0

    @classmethod
    def create(cls, actor: ModelParams, q1: ModelParams, q2: ModelParams,
               cfg: SacConfig) -> "SacState":
        params = SacParams(
            actor=actor, q1=q1, q2=q2,
            q1_targ=q1.copy(), q2_targ=q2.copy(),
            log_alpha=float(np.log(cfg.alpha_init)),
        )
        return cls(
            params=params,
            actor_opt=OptState.for_params(actor, cfg.actor_lr),
            q1_opt=OptState.for_params(q1, cfg.critic_lr),
            q2_opt=OptState.for_params(q2, cfg.critic_lr),
            alpha_opt=ScalarAdam(lr=cfg.alpha_lr),
            action_dim=actor.arch.output_dim,
        )


def soft_update(target: ModelParams, online: ModelParams, tau: float) -> None:
    """target <- (1 - tau)*target + tau*online, in place."""
    for (tw, tb), (ow, ob) in zip(target.layers, online.layers):
        tw *= 1.0 - tau
        tw += tau * ow
        tb *= 1.0 - tau
        tb += tau * ob
    target.log_std *= 1.0 - tau
    target.log_std += tau * online.log_std


def critic_target(
    params: SacParams, batch: dict, gamma: float, rng: np.random.Generator
) -> np.ndarray:
    """y for both critics; no gradients flow through it."""
    next_obs = batch["next_obs"]
    mean_next, _ = forward(params.actor, next_obs)
    eps = rng.standard_normal(mean_next.shape)
    a_next, _, logp_next = sample_squashed(mean_next, params.actor.log_std, eps)
    q_in = np.concatenate([next_obs, a_next], axis=-1)
    q1t, _ = value_forward(params.q1_targ, q_in)
    q2t, _ = value_forward(params.q2_targ, q_in)
    alpha = np.exp(params.log_alpha)
    soft_v = np.minimum(q1t, q2t) - alpha * logp_next
    not_done = 1.0 - batch["terminated"].astype(np.float64)
    return batch["reward"] + gamma ** batch["n_used"] * not_done * soft_v


def critic_loss_and_grads(q_params: ModelParams, q_in: np.ndarray,
                          y: np.ndarray):
    """MSE of one critic against a fixed target, with exact gradients."""
    n = q_in.shape[0]
    q_pred, cache = value_forward(q_params, q_in)
    err = q_pred - y
    loss = float(np.mean(err * err))
    _, grads = backward(q_params, cache, (2.0 * err / n)[:, None])
    return loss, grads, q_pred


def sac_update(
    batch: dict,
    state: SacState,
    cfg: SacConfig,
    rng: np.random.Generator,
) -> UpdateStats:
    """One critic update (plus periodic actor/alpha update) on a replay batch.

    ``batch`` maps obs, action, reward, next_obs, terminated, n_used to
    arrays with a shared leading dimension >= 2.
    """
    n = batch["obs"].shape[0]
    if n < 2:
        raise ValueError("sac_update needs a batch of at least 2 rows")
    params = state.params

    y = critic_target(params, batch, cfg.gamma, rng)
    q_in = np.concatenate([batch["obs"], batch["action"]], axis=-1)
    critic_loss = 0.0
    for q_params, q_opt in ((params.q1, state.q1_opt), (params.q2, state.q2_opt)):
        loss, grads, _ = critic_loss_and_grads(q_params, q_in, y)
        critic_loss += loss
        adam_step(q_params, grads, q_opt, max_grad_norm=cfg.max_grad_norm)
    if not np.isfinite(critic_loss):
        raise DivergenceError(f"non-finite SAC critic loss {critic_loss}")

    state.update_count += 1
    stats = UpdateStats(lr=cfg.critic_lr)
    stats.extra["critic_loss"] = critic_loss
    stats.extra["alpha"] = float(np.exp(params.log_alpha))

    if state.update_count % cfg.policy_frequency == 0:
        actor_loss, alpha_loss = _actor_and_alpha_step(batch, state, cfg, rng)
        stats.extra["actor_loss"] = actor_loss
        stats.extra["alpha_loss"] = alpha_loss
        stats.extra["alpha"] = float(np.exp(state.params.log_alpha))

    soft_update(params.q1_targ, params.q1, cfg.tau)
    soft_update(params.q2_targ, params.q2, cfg.tau)
    return stats


def actor_loss_and_grads(params: SacParams, obs: np.ndarray, eps: np.ndarray):
    """Reparameterized actor loss mean(alpha*logpi - min Q) with exact grads.

    ``eps`` is the fixed standard-normal noise of the squashed sample, so
    the loss is a deterministic, differentiable function of actor params.
    Returns (loss, actor grads, logp).
    """
    n = obs.shape[0]
    alpha = float(np.exp(params.log_alpha))

    mean, a_cache = forward(params.actor, obs)
    log_std = params.actor.log_std
    a, _, logp = sample_squashed(mean, log_std, eps)

    q_in = np.concatenate([obs, a], axis=-1)
    q1_pred, c1 = value_forward(params.q1, q_in)
    q2_pred, c2 = value_forward(params.q2, q_in)
    q_min = np.minimum(q1_pred, q2_pred)
    loss = float(np.mean(alpha * logp - q_min))

    # dQmin/da via the argmin critic's input gradient (param grads unused)
    pick1 = (q1_pred <= q2_pred).astype(np.float64)
    din1, _ = backward(params.q1, c1, pick1[:, None])
    din2, _ = backward(params.q2, c2, (1.0 - pick1)[:, None])
    dq_da = (din1 + din2)[:, obs.shape[1]:]

    std = np.exp(log_std)
    one_m_a2 = 1.0 - a * a
    # d logpi / du: the squash correction only (the Gaussian term is constant
    # in u under the reparameterization)
    dlogp_du = 2.0 * a * one_m_a2 / (one_m_a2 + _SQUASH_EPS)
    da_du = one_m_a2
    du_dlogstd = std * eps

    dmean = (alpha * dlogp_du - dq_da * da_du) / n
    dlog_std = ((alpha * (-1.0 + dlogp_du * du_dlogstd)
                 - dq_da * da_du * du_dlogstd) / n).sum(axis=0)

    _, actor_grads = backward(params.actor, a_cache, dmean)
    actor_grads.log_std += dlog_std.astype(actor_grads.log_std.dtype)
    return loss, actor_grads, logp


def alpha_loss_and_grad(log_alpha: float, logp: np.ndarray,
                        target_entropy: float) -> tuple[float, float]:
    """Temperature loss -log_alpha * mean(logpi + target_entropy); logpi is
    treated as a constant."""
    excess = float(np.mean(logp + target_entropy))
    return -log_alpha * excess, -excess


def _actor_and_alpha_step(
    batch: dict, state: SacState, cfg: SacConfig, rng: np.random.Generator
) -> tuple[float, float]:
    params = state.params
    obs = batch["obs"]
    eps = rng.standard_normal((obs.shape[0], state.action_dim))
    actor_loss, actor_grads, logp = actor_loss_and_grads(params, obs, eps)
    if not np.isfinite(actor_loss):
        raise DivergenceError(f"non-finite SAC actor loss {actor_loss}")
    adam_step(params.actor, actor_grads, state.actor_opt,
              max_grad_norm=cfg.max_grad_norm)

    target_entropy = -cfg.target_entropy_ratio * state.action_dim
    alpha_loss, dlog_alpha = alpha_loss_and_grad(
        params.log_alpha, logp, target_entropy
    )
    params.log_alpha = state.alpha_opt.step(params.log_alpha, dlog_alpha)
    return actor_loss, alpha_loss
