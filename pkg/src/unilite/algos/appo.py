"""Asynchronous PPO update: V-trace targets, then the PPO machinery.

Consumes rollouts produced by a slightly stale policy. Target log-probs and
values are recomputed under the current parameters; V-trace targets replace
GAE returns/advantages; the clipped-surrogate epoch loop then runs
unchanged. The bootstrap and truncation values recorded at collection time
are kept (the segment does not carry the final observations themselves).
"""

from __future__ import annotations

import numpy as np

from ..tensornet import forward, gaussian_log_prob, value_forward
from .configs import AppoConfig
from .estimators import vtrace
from .ppo import AcOpt, AcParams, run_epochs
from .segment import RolloutSegment, UpdateStats


def appo_update(
    segment: RolloutSegment,
    params: AcParams,
    opt: AcOpt,
    cfg: AppoConfig,
    rng: np.random.Generator,
    learner_version: int = 0,
) -> UpdateStats:
    t, b = segment.rewards.shape
    flat = lambda arr: arr.reshape(-1, *arr.shape[2:])
    obs = flat(segment.obs)
    critic_obs = flat(segment.critic_obs)
    actions = flat(segment.actions)

    mean, _ = forward(params.actor, obs)
    target_logp = gaussian_log_prob(
        mean, params.actor.log_std, actions
    ).reshape(t, b)
    values_now, _ = value_forward(params.critic, critic_obs)
    values_now = values_now.reshape(t, b).astype(np.float64)

    vs, pg_adv = vtrace(
        segment.behavior_log_prob,
        target_logp,
        segment.rewards,
        values_now,
        segment.terminated,
        segment.bootstrap_value,
        cfg.gamma,
        cfg.vtrace_clip_rho,
        cfg.vtrace_clip_c,
        truncated=segment.truncated,
        truncation_values=segment.truncation_values,
    )

    stats = run_epochs(
        params,
        opt,
        cfg,
        rng,
        obs,
        critic_obs,
        actions,
        segment.behavior_log_prob.reshape(-1),
        pg_adv.reshape(-1),
        vs.reshape(-1),
        values_now.reshape(-1),
    )
    stats.staleness = learner_version - segment.behavior_version
    return stats
