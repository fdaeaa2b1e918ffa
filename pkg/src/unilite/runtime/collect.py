"""Rollout collection shared by the synchronized and asynchronous on-policy
regimes: fixed-horizon segments with behavior log-probs, values, and
truncation bootstrap values."""

from __future__ import annotations

import threading
from collections import deque

import numpy as np

from ..algos import AcParams, RolloutSegment
from ..envcore import EnvPool
from ..envcore.rng import stream
from ..tensornet import forward, gaussian_log_prob, value_forward
from ..traceview import Tracer


class EpisodeTracker:
    """Running episode-return and tracking-kernel statistics.

    Written by the collector role, read by whichever role emits metrics.
    """

    def __init__(self, n_envs: int, window: int = 100):
        self.ep_return = np.zeros(n_envs)
        self.window: deque = deque(maxlen=window)
        self.kernel_sum = 0.0
        self.kernel_steps = 0
        self._lock = threading.Lock()

    def step(self, batch) -> None:
        with self._lock:
            self.ep_return += batch.reward
            done = batch.terminated | batch.truncated
            for idx in np.nonzero(done)[0]:
                self.window.append(float(self.ep_return[idx]))
                self.ep_return[idx] = 0.0
            self.kernel_sum += float(np.mean(batch.info["tracking_kernel"]))
            self.kernel_steps += 1

    def mean_episode_reward(self) -> float:
        with self._lock:
            if not self.window:
                return float("nan")
            return float(np.mean(self.window))

    def take_kernel_mean(self) -> float:
        with self._lock:
            if self.kernel_steps == 0:
                return float("nan")
            value = self.kernel_sum / self.kernel_steps
            self.kernel_sum = 0.0
            self.kernel_steps = 0
            return value


class SegmentCollector:
    """Steps a pool with published weights and assembles rollout segments."""

    def __init__(self, pool: EnvPool, tracer: Tracer, seed: int):
        self.pool = pool
        self.tracer = tracer
        self.rng_policy = stream(seed, "policy")
        self.obs, self.critic_obs = pool.observe()
        self.tracker = EpisodeTracker(pool.n_envs)
        self.total_env_steps = 0
        self._seq = 0

    def collect(self, weights: AcParams, horizon: int,
                behavior_version: int) -> RolloutSegment:
        pool = self.pool
        n = pool.n_envs
        obs_buf = np.zeros((horizon, n, pool.obs_dim), dtype=np.float32)
        cobs_buf = np.zeros((horizon, n, pool.critic_obs_dim), dtype=np.float32)
        act_buf = np.zeros((horizon, n, pool.action_dim), dtype=np.float32)
        logp_buf = np.zeros((horizon, n))
        rew_buf = np.zeros((horizon, n))
        term_buf = np.zeros((horizon, n), dtype=bool)
        trunc_buf = np.zeros((horizon, n), dtype=bool)
        val_buf = np.zeros((horizon, n))
        tval_buf = np.zeros((horizon, n))

        log_std = weights.actor.log_std.astype(np.float64)
        std = np.exp(log_std)
        for t in range(horizon):
            with self.tracer.span("collector", "collector/actor_inference"):
                mean, _ = forward(weights.actor, self.obs)
                noise = self.rng_policy.standard_normal(mean.shape)
                actions = (mean + std * noise).astype(np.float32)
                logp = gaussian_log_prob(mean, log_std, actions)
                values, _ = value_forward(weights.critic, self.critic_obs)

            obs_buf[t] = self.obs
            cobs_buf[t] = self.critic_obs
            act_buf[t] = actions
            logp_buf[t] = logp
            val_buf[t] = values

            with self.tracer.span("collector", "collector/env_step"):
                batch = pool.step(actions.astype(np.float64))

            rew_buf[t] = batch.reward
            term_buf[t] = batch.terminated
            trunc_buf[t] = batch.truncated
            trunc_ids = np.nonzero(batch.truncated)[0]
            if len(trunc_ids):
                final_rows = batch.info["final_critic_obs"]
                done_ids = batch.info["final_env_ids"]
                pick = np.isin(done_ids, trunc_ids)
                tv, _ = value_forward(weights.critic, final_rows[pick])
                tval_buf[t, done_ids[pick]] = tv

            self.tracker.step(batch)
            self.obs = batch.obs
            self.critic_obs = batch.critic_obs
            self.total_env_steps += n

        bootstrap, _ = value_forward(weights.critic, self.critic_obs)
        seg = RolloutSegment(
            obs=obs_buf,
            critic_obs=cobs_buf,
            actions=act_buf,
            behavior_log_prob=logp_buf,
            rewards=rew_buf,
            terminated=term_buf,
            truncated=trunc_buf,
            values=val_buf,
            bootstrap_value=bootstrap.astype(np.float64),
            truncation_values=tval_buf,
            behavior_version=behavior_version,
            seq=self._seq,
        )
        self._seq += 1
        return seg
