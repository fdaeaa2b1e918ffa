"""Advantage and value-target estimators: GAE, V-trace, n-step packing.

All recursions run in float64 regardless of input dtype. Terminated steps
cut bootstrapping entirely; truncated steps bootstrap through the recorded
final-observation value (``truncation_values``) and cut the recursion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _next_values(
    values: np.ndarray,
    bootstrap_value: np.ndarray,
    truncated: np.ndarray | None,
    truncation_values: np.ndarray | None,
) -> np.ndarray:
    """V(s_{t+1}) per step, overridden at truncations by the recorded
    final-observation value."""
    nxt = np.vstack([values[1:], bootstrap_value[None, :]])
    if truncated is not None and truncation_values is not None:
        nxt = np.where(truncated, truncation_values, nxt)
    return nxt


def gae(
    rewards,
    values,
    terminated,
    truncated,
    bootstrap_value,
    gamma: float,
    lam: float,
    truncation_values=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimation over a (T, B) rollout.

    delta_t = r_t + gamma*(1-term_t)*V_{t+1} - V_t
    A_t     = delta_t + gamma*lam*(1-done_t)*A_{t+1}
    returns = A + V
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    terminated = np.asarray(terminated, dtype=bool)
    truncated = np.asarray(truncated, dtype=bool)
    bootstrap_value = np.asarray(bootstrap_value, dtype=np.float64)
    if not (rewards.shape == values.shape == terminated.shape == truncated.shape):
        raise ValueError("rewards/values/terminated/truncated must share (T, B)")

    t_len = rewards.shape[0]
    done = terminated | truncated
    nxt = _next_values(values, bootstrap_value, truncated, truncation_values)
    delta = rewards + gamma * (~terminated) * nxt - values

    advantages = np.zeros_like(rewards)
    carry = np.zeros(rewards.shape[1])
    for t in range(t_len - 1, -1, -1):
        carry = delta[t] + gamma * lam * (~done[t]) * carry
        advantages[t] = carry
    return advantages, advantages + values


def vtrace(
    behavior_log_prob,
    target_log_prob,
    rewards,
    values,
    terminated,
    bootstrap_value,
    gamma: float,
    rho_bar: float,
    c_bar: float,
    truncated=None,
    truncation_values=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Clipped importance-weighted value targets and policy-gradient
    advantages (IMPALA-family recursion).

    rho_t = min(rho_bar, exp(dlogp)); c_t = min(c_bar, exp(dlogp))
    delta_t = rho_t * (r_t + gamma*(1-term_t)*V_{t+1} - V_t)
    v_t = V_t + delta_t + gamma*(1-done_t)*c_t*(v_{t+1} - V_{t+1})
    pg_adv_t = rho_t * (r_t + gamma*(1-term_t)*w_{t+1} - V_t),
    with w_{t+1} = v_{t+1} except at truncations, where the recorded
    final-observation value is used.

    On-policy (dlogp = 0) with clips >= 1 this reduces to lambda=1 GAE.
    """
    behavior_log_prob = np.asarray(behavior_log_prob, dtype=np.float64)
    target_log_prob = np.asarray(target_log_prob, dtype=np.float64)
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    terminated = np.asarray(terminated, dtype=bool)
    bootstrap_value = np.asarray(bootstrap_value, dtype=np.float64)
    if not (rewards.shape == values.shape == terminated.shape
            == behavior_log_prob.shape == target_log_prob.shape):
        raise ValueError("vtrace inputs must share (T, B)")
    if truncated is None:
        truncated = np.zeros_like(terminated)
    truncated = np.asarray(truncated, dtype=bool)

    t_len = rewards.shape[0]
    done = terminated | truncated
    ratio = np.exp(target_log_prob - behavior_log_prob)
    rho = np.minimum(rho_bar, ratio)
    c = np.minimum(c_bar, ratio)

    nxt = _next_values(values, bootstrap_value, truncated, truncation_values)
    delta = rho * (rewards + gamma * (~terminated) * nxt - values)

    vs = np.zeros_like(rewards)
    carry = np.zeros(rewards.shape[1])  # v_{t+1} - V_{t+1}
    for t in range(t_len - 1, -1, -1):
        vs[t] = values[t] + delta[t] + gamma * (~done[t]) * c[t] * carry
        carry = vs[t] - values[t]

    vs_next = np.vstack([vs[1:], bootstrap_value[None, :]])
    w_next = np.where(done, nxt, vs_next)
    pg_adv = rho * (rewards + gamma * (~terminated) * w_next - values)
    return vs, pg_adv


@dataclass
class ReturnStdNormalizer:
    """Running std of per-env discounted returns, for reward normalization.

    Rewards are divided by the return std; the result is clipped so the
    implied discounted-return magnitude stays within g_max, i.e. to
    +-(1-gamma)*g_max.
    """

    gamma: float
    g_max: float
    n_envs: int
    eps: float = 1e-8
    returns: np.ndarray = None
    count: float = 0.0
    mean: float = 0.0
    m2: float = 0.0

    def __post_init__(self) -> None:
        if self.returns is None:
            self.returns = np.zeros(self.n_envs, dtype=np.float64)

    @property
    def std(self) -> float:
        if self.count < 2:
            return 1.0
        return float(np.sqrt(self.m2 / self.count))

    def normalize(self, rewards: np.ndarray, done: np.ndarray) -> np.ndarray:
        rewards = np.asarray(rewards, dtype=np.float64)
        self.returns = self.returns * self.gamma * (~np.asarray(done, bool)) + rewards
        for g in self.returns:
            self.count += 1
            delta = g - self.mean
            self.mean += delta / self.count
            self.m2 += delta * (g - self.mean)
        out = rewards / (self.std + self.eps)
        bound = (1.0 - self.gamma) * self.g_max
        return np.clip(out, -bound, bound)


class NStepPacker:
    """Packs a per-env transition stream into n-step replay rows.

    R_n = sum_{k < n_used} gamma^k r_{t+k}, truncated at episode boundaries
    with the actual window length recorded in ``n_used``. With n = 1 rows
    pass straight through.
    """

    def __init__(self, n: int, gamma: float, n_envs: int):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = n
        self.gamma = gamma
        # per env: list of [obs, action, r_acc, k_used]
        self._pending: list[list] = [[] for _ in range(n_envs)]

    def push(
        self, obs, actions, rewards, next_obs, terminated, truncated
    ) -> list[tuple]:
        """Feed one step for all envs; returns completed rows as tuples
        (obs, action, reward_n, next_obs, terminated, n_used)."""
        rows: list[tuple] = []
        done = np.asarray(terminated, bool) | np.asarray(truncated, bool)
        for e in range(len(self._pending)):
            pend = self._pending[e]
            for item in pend:
                item[2] += (self.gamma ** item[3]) * rewards[e]
                item[3] += 1
            pend.append([obs[e].copy(), actions[e].copy(), float(rewards[e]), 1])
            if done[e]:
                for item in pend:
                    rows.append(
                        (item[0], item[1], item[2], next_obs[e].copy(),
                         bool(terminated[e]), item[3])
                    )
                pend.clear()
            elif pend[0][3] == self.n:
                item = pend.pop(0)
                rows.append(
                    (item[0], item[1], item[2], next_obs[e].copy(), False, self.n)
                )
        return rows


def nstep_and_reward_norm(
    packer: NStepPacker,
    norm: ReturnStdNormalizer | None,
    obs,
    actions,
    rewards,
    next_obs,
    terminated,
    truncated,
) -> list[tuple]:
    """One stream step: optional reward normalization, then n-step packing."""
    if norm is not None:
        done = np.asarray(terminated, bool) | np.asarray(truncated, bool)
        rewards = norm.normalize(rewards, done)
    return packer.push(obs, actions, rewards, next_obs, terminated, truncated)
