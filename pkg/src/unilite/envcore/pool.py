"""Batched environment pool: sparse resets, interval pushes, auto-reset stepping.

State lives in (n_envs, ...) float64 arrays; observations are emitted as
float32. A pool is owned by exactly one collector role at a time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .backends import get_backend
from .dr import (
    BackendCapabilities,
    PushPlan,
    ResetPayload,
    SkipRecord,
    build_interval_plan,
    filter_payload,
    sample_reset_payload,
)
from .rewards import joystick_reward, tracking_kernel
from .task import TaskConfig


@dataclass
class StepBatch:
    """Outputs of one vectorized control step for B environments."""

    obs: np.ndarray
    critic_obs: np.ndarray
    reward: np.ndarray
    terminated: np.ndarray
    truncated: np.ndarray
    episode_step: np.ndarray
    info: dict = field(default_factory=dict)


class EnvPool:
    """B parallel toy environments behind the shared backend contract.

    Use :func:`materialize` to build one. ``info`` on each StepBatch carries
    ``final_obs`` / ``final_critic_obs`` (pre-reset observations of envs that
    ended this step) and ``tracking_kernel`` (per-env kernel value, for
    monitoring).
    """

    def __init__(self, task: TaskConfig, n_envs: int, backend_id: str, seed: int):
        if n_envs < 1:
            raise ValueError("n_envs must be >= 1")
        self.task = task
        self.n_envs = n_envs
        self.backend = get_backend(backend_id)
        self.backend_id = self.backend.backend_id
        self.seed = seed

        self.command_dim = len(task.command_low)
        if self.command_dim != self.backend.vel_dim:
            raise ValueError(
                f"task command dim {self.command_dim} does not match backend "
                f"{backend_id!r} tracked-velocity dim {self.backend.vel_dim}"
            )

        self.state = self.backend.alloc_state(n_envs)
        self.command = np.zeros((n_envs, self.command_dim))
        self.prev_action = np.zeros((n_envs, self.backend.action_dim))
        self.episode_step = np.zeros(n_envs, dtype=np.int64)
        self.global_step = 0
        self.skip_log: list[SkipRecord] = []

        self._env_rngs = rngmod.env_streams(seed, n_envs)
        self._noise_rng = rngmod.stream(seed, "obs_noise")

        all_ids = np.arange(n_envs)
        payload = sample_reset_payload(
            task.dr, self.capabilities, all_ids, self._env_rngs
        )
        self.reset(all_ids, payload)

    @property
    def capabilities(self) -> BackendCapabilities:
        return self.backend.capabilities

    @property
    def obs_dim(self) -> int:
        return self.backend.obs_dim

    @property
    def critic_obs_dim(self) -> int:
        return self.backend.critic_obs_dim

    @property
    def action_dim(self) -> int:
        return self.backend.action_dim

    def env_rngs(self):
        return self._env_rngs

    # -- reset ---------------------------------------------------------------

    def reset(self, env_ids, randomization: ResetPayload | None = None) -> np.ndarray:
        """Re-initialize the listed envs only; returns their actor obs rows.

        Unsupported payload fields are dropped with a skip record; supported
        ones are applied before the new state takes effect. Cost scales with
        len(env_ids), not pool size.
        """
        ids = np.asarray(env_ids, dtype=np.int64)
        if len(np.unique(ids)) != len(ids):
            raise ValueError("env_ids must be duplicate-free")
        if len(ids) and (ids.min() < 0 or ids.max() >= self.n_envs):
            raise ValueError(f"env id out of range [0, {self.n_envs})")

        applied: dict[str, np.ndarray] = {}
        if randomization is not None:
            if len(randomization.env_ids) != len(ids):
                raise ValueError(
                    "payload env_ids length does not match reset env_ids"
                )
            applied, skipped = filter_payload(randomization, self.capabilities)
            self.skip_log.extend(skipped)

        self.backend.reset_state(self.state, ids, applied)
        for env_id in ids:
            self.command[env_id] = self._env_rngs[env_id].uniform(
                self.task.command_low, self.task.command_high
            )
        self.prev_action[ids] = 0.0
        self.episode_step[ids] = 0
        return self._actor_obs()[ids].astype(np.float32)

    # -- stepping ------------------------------------------------------------

    def step(self, actions: np.ndarray) -> StepBatch:
        """Advance every env one control step (``decimation`` physics sub-steps).

        Order: stage any due interval push, integrate, score, then auto-reset
        envs that terminated or hit the episode limit. Observations of
        auto-reset envs are post-reset; their pre-reset observations are in
        ``info``.
        """
        actions = np.asarray(actions, dtype=np.float64)
        if actions.shape != (self.n_envs, self.backend.action_dim):
            raise ValueError(
                f"actions shape {actions.shape} != "
                f"({self.n_envs}, {self.backend.action_dim})"
            )
        if not np.all(np.isfinite(actions)):
            raise ValueError("actions must be finite")

        self.global_step += 1
        plan = build_interval_plan(
            self.task.dr,
            self.global_step,
            np.ones(self.n_envs, dtype=bool),
            self._env_rngs,
            vdim=self.backend.vel_dim,
        )
        if len(plan):
            self.backend.apply_push(self.state, plan.env_ids, plan.delta_v)

        clipped = np.clip(actions, -1.0, 1.0)
        u = clipped * self.task.action_scale
        for _ in range(self.task.decimation):
            self.backend.substep(self.state, u, self.task.dt_sim)
        self.episode_step += 1

        v = self.backend.tracked_velocity(self.state)
        reward = joystick_reward(
            v,
            self.command,
            clipped,
            self.prev_action,
            self.task.reward_weights,
            self.task.tracking_sigma,
            self.task.dt_ctrl,
        )
        err = np.linalg.norm(v - self.command, axis=-1)
        kernel = tracking_kernel(err, self.task.tracking_sigma)
        self.prev_action = clipped

        terminated, truncated = self.check_termination()

        # One noise block per step, regardless of resets, so auto-resetting
        # env i never shifts the noise sequence seen by env j.
        noise = self._draw_obs_noise()

        info: dict = {"tracking_kernel": kernel, "push_plan": plan}
        done_ids = np.nonzero(terminated | truncated)[0]
        if len(done_ids):
            # Pre-reset observations, for bootstrapping at truncation.
            pre = self._actor_obs() + noise
            info["final_obs"] = pre[done_ids].astype(np.float32)
            info["final_critic_obs"] = self._critic_obs()[done_ids].copy()
            info["final_env_ids"] = done_ids
            payload = sample_reset_payload(
                self.task.dr, self.capabilities, done_ids, self._env_rngs
            )
            self.reset(done_ids, payload)

        return StepBatch(
            obs=(self._actor_obs() + noise).astype(np.float32),
            critic_obs=self._critic_obs(),
            reward=reward.astype(np.float64),
            terminated=terminated,
            truncated=truncated,
            episode_step=self.episode_step.copy(),
            info=info,
        )

    def check_termination(self) -> tuple[np.ndarray, np.ndarray]:
        """(terminated, truncated) flags; truncation yields to termination."""
        terminated = self.backend.speed(self.state) > self.task.termination_speed_max
        truncated = self.episode_step >= self.task.episode_length
        truncated &= ~terminated
        return terminated, truncated

    # -- observations ----------------------------------------------------------

    def observe(self) -> tuple[np.ndarray, np.ndarray]:
        """Current (actor_obs, critic_obs); consumes one obs-noise block."""
        obs = (self._actor_obs() + self._draw_obs_noise()).astype(np.float32)
        return obs, self._critic_obs()

    def _draw_obs_noise(self) -> np.ndarray:
        scale = self.task.obs_noise_scale * self.task.dr.obs_noise_level
        if scale <= 0:
            return np.zeros((self.n_envs, self.obs_dim))
        return scale * self._noise_rng.standard_normal((self.n_envs, self.obs_dim))

    def _actor_obs(self) -> np.ndarray:
        obs = self.backend.actor_obs(self.state, self.command, self.prev_action)
        return obs.astype(np.float64)

    def _critic_obs(self) -> np.ndarray:
        actor = self.backend.actor_obs(self.state, self.command, self.prev_action)
        extra = self.backend.critic_extra(self.state)
        return np.concatenate([actor, extra], axis=-1).astype(np.float32)


def materialize(
    task: TaskConfig, n_envs: int, backend_id: str, seed: int
) -> EnvPool:
    """Build a pool with every env freshly reset at episode step 0.

    Cold-start randomization (mass, COM) is applied during this initial
    reset; the result is deterministic for a fixed seed.
    """
    return EnvPool(task, n_envs, backend_id, seed)
