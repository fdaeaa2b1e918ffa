"""Tracking reward kernel and the control-step-scaled reward sum."""

from __future__ import annotations

import numpy as np


def tracking_kernel(error_norm, sigma: float):
    """exp(-e^2 / sigma^2), in (0, 1]."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    e = np.asarray(error_norm)
    return np.exp(-(e * e) / (sigma * sigma))


def joystick_reward(v, c, a, a_prev, weights, sigma: float, dt_ctrl: float):
    """Per-env reward dt_ctrl * (w_track * kernel(|v - c|) + w_rate * |a - a_prev|^2).

    Velocity tracking uses the exponential kernel; the action-rate term is a
    squared-difference penalty, so its weight is negative.
    """
    v = np.atleast_2d(np.asarray(v))
    c = np.atleast_2d(np.asarray(c))
    a = np.atleast_2d(np.asarray(a))
    a_prev = np.atleast_2d(np.asarray(a_prev))
    err = np.linalg.norm(v - c, axis=-1)
    rate = np.sum((a - a_prev) ** 2, axis=-1)
    w_track = weights["track"]
    w_rate = weights["action_rate"]
    return dt_ctrl * (w_track * tracking_kernel(err, sigma) + w_rate * rate)
