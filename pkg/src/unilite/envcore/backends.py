"""Toy batched physics backends behind one shared contract.

Two backends prove the contract is backend-generic:

* ``pointmass`` — planar double integrator with linear drag; the policy
  tracks a 2D velocity command.
* ``pendulum`` — torque-driven pendulum; the policy tracks an angular
  velocity command.

A backend owns dynamics, observation layout, and the set of physical
override fields it can apply. Everything else (commands, rewards,
termination, DR lifecycle) lives in the pool.
"""

from __future__ import annotations

import numpy as np

from .dr import BackendCapabilities


class PointmassBackend:
    """Double integrator: v' = v + dt*(u/m - drag*v), p' = p + dt*v'."""

    backend_id = "pointmass"
    drag = 0.1
    base_mass = 1.0
    action_dim = 2
    vel_dim = 2
    # actor obs: [v(2), c(2), a_prev(2)]; critic adds privileged [p(2), mass(1)]
    obs_dim = 6
    critic_obs_dim = 9

    capabilities = BackendCapabilities(
        supported_reset_fields=("mass_delta", "com_offset"),
        supported_interval_fields=("push_delta_v",),
    )

    def alloc_state(self, n: int) -> dict[str, np.ndarray]:
        return {
            "position": np.zeros((n, 2)),
            "velocity": np.zeros((n, 2)),
            "mass": np.full(n, self.base_mass),
        }

    def reset_state(self, state, ids, applied_fields) -> None:
        state["position"][ids] = 0.0
        state["velocity"][ids] = 0.0
        state["mass"][ids] = self.base_mass
        if "mass_delta" in applied_fields:
            state["mass"][ids] = self.base_mass + applied_fields["mass_delta"]
        if "com_offset" in applied_fields:
            # Toy analog: a COM shift re-seats the point mass at reset.
            state["position"][ids] = applied_fields["com_offset"]

    def substep(self, state, u, dt: float) -> None:
        m = state["mass"][:, None]
        v = state["velocity"]
        v += dt * (u / m - self.drag * v)
        state["position"] += dt * v

    def apply_push(self, state, env_ids, delta_v) -> None:
        state["velocity"][env_ids] += delta_v

    def tracked_velocity(self, state) -> np.ndarray:
        return state["velocity"]

    def speed(self, state) -> np.ndarray:
        return np.linalg.norm(state["velocity"], axis=-1)

    def actor_obs(self, state, command, prev_action) -> np.ndarray:
        return np.concatenate([state["velocity"], command, prev_action], axis=-1)

    def critic_extra(self, state) -> np.ndarray:
        return np.concatenate([state["position"], state["mass"][:, None]], axis=-1)


class PendulumBackend:
    """Torque-controlled pendulum tracking an angular-velocity command.

    State (theta, theta_dot); dynamics
    theta_ddot = (u - m*g*l*sin(theta)) / (m*l^2) - drag*theta_dot.
    """

    backend_id = "pendulum"
    drag = 0.1
    base_mass = 1.0
    gravity = 9.81
    length = 1.0
    action_dim = 1
    vel_dim = 1
    # actor obs: [sin(theta), cos(theta), theta_dot, c, a_prev]
    obs_dim = 5
    critic_obs_dim = 6  # adds privileged mass

    capabilities = BackendCapabilities(
        supported_reset_fields=("mass_delta",),
        supported_interval_fields=("push_delta_v",),
    )

    def alloc_state(self, n: int) -> dict[str, np.ndarray]:
        return {
            "theta": np.full(n, np.pi),  # hanging down
            "theta_dot": np.zeros(n),
            "mass": np.full(n, self.base_mass),
        }

    def reset_state(self, state, ids, applied_fields) -> None:
        state["theta"][ids] = np.pi
        state["theta_dot"][ids] = 0.0
        state["mass"][ids] = self.base_mass
        if "mass_delta" in applied_fields:
            state["mass"][ids] = self.base_mass + applied_fields["mass_delta"]

    def substep(self, state, u, dt: float) -> None:
        m = state["mass"]
        g, ell = self.gravity, self.length
        torque = u[:, 0]
        acc = (torque - m * g * ell * np.sin(state["theta"])) / (m * ell * ell)
        acc -= self.drag * state["theta_dot"]
        state["theta_dot"] += dt * acc
        state["theta"] += dt * state["theta_dot"]

    def apply_push(self, state, env_ids, delta_v) -> None:
        state["theta_dot"][env_ids] += delta_v[:, 0]

    def tracked_velocity(self, state) -> np.ndarray:
        return state["theta_dot"][:, None]

    def speed(self, state) -> np.ndarray:
        return np.abs(state["theta_dot"])

    def actor_obs(self, state, command, prev_action) -> np.ndarray:
        return np.concatenate(
            [
                np.sin(state["theta"])[:, None],
                np.cos(state["theta"])[:, None],
                state["theta_dot"][:, None],
                command,
                prev_action,
            ],
            axis=-1,
        )

    def critic_extra(self, state) -> np.ndarray:
        return state["mass"][:, None]


BACKENDS = {
    PointmassBackend.backend_id: PointmassBackend,
    PendulumBackend.backend_id: PendulumBackend,
}


def get_backend(backend_id: str):
    try:
        return BACKENDS[backend_id]()
    except KeyError:
        raise ValueError(
            f"unknown backend {backend_id!r}; available: {sorted(BACKENDS)}"
        ) from None
