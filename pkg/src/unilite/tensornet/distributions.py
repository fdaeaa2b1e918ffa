"""Diagonal Gaussian policy heads: plain and tanh-squashed."""

from __future__ import annotations

import numpy as np

LOG_2PI = float(np.log(2.0 * np.pi))
_SQUASH_EPS = 1e-6


def gaussian_log_prob(mean, log_std, action) -> np.ndarray:
    """log N(action; mean, exp(log_std)) summed over action dims."""
    mean = np.asarray(mean)
    action = np.asarray(action)
    std = np.exp(log_std)
    z = (action - mean) / std
    per_dim = -log_std - 0.5 * LOG_2PI - 0.5 * z * z
    return per_dim.sum(axis=-1)


def gaussian_entropy(log_std, batch: int | None = None) -> np.ndarray:
    """Sum over dims of (log_std + 0.5*ln(2*pi*e)); constant across states."""
    h = float(np.sum(log_std + 0.5 * (LOG_2PI + 1.0)))
    if batch is None:
        return np.float64(h)
    return np.full(batch, h)


def gaussian_dist(mean, log_std, action=None, squashed: bool = False, rng=None):
    """Sample (or evaluate) a diagonal Gaussian head.

    Returns (sample, log_prob, entropy). With ``action`` given, the sample
    is that action and log_prob is evaluated at it. The squashed variant
    tanh-transforms samples and applies the log-det correction; entropy is
    then reported for the pre-squash Gaussian.
    """
    mean = np.atleast_2d(np.asarray(mean, dtype=np.float64))
    log_std = np.asarray(log_std, dtype=np.float64)
    entropy = gaussian_entropy(log_std, batch=mean.shape[0])

    if not squashed:
        if action is None:
            if rng is None:
                raise ValueError("sampling requires an rng")
            sample = mean + np.exp(log_std) * rng.standard_normal(mean.shape)
        else:
            sample = np.atleast_2d(np.asarray(action, dtype=np.float64))
        return sample, gaussian_log_prob(mean, log_std, sample), entropy

    if action is None:
        if rng is None:
            raise ValueError("sampling requires an rng")
        eps = rng.standard_normal(mean.shape)
        u = mean + np.exp(log_std) * eps
        sample = np.tanh(u)
    else:
        sample = np.clip(
            np.atleast_2d(np.asarray(action, dtype=np.float64)),
            -1.0 + _SQUASH_EPS, 1.0 - _SQUASH_EPS,
        )
        u = np.arctanh(sample)
    log_prob = squashed_log_prob(mean, log_std, u, sample)
    return sample, log_prob, entropy


def squashed_log_prob(mean, log_std, u, a) -> np.ndarray:
    """log-density of a = tanh(u), u ~ N(mean, exp(log_std))."""
    base = gaussian_log_prob(mean, log_std, u)
    correction = np.log1p(-(a * a) + _SQUASH_EPS).sum(axis=-1)
    return base - correction


def sample_squashed(mean, log_std, eps) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reparameterized squashed sample from fixed standard-normal noise.

    Returns (a, u, log_prob) with a = tanh(u), u = mean + std*eps. Keeping
    eps explicit makes the actor loss differentiable through the sample.
    """
    mean = np.asarray(mean)
    std = np.exp(log_std)
    eps = np.asarray(eps, dtype=mean.dtype)
    u = mean + std * eps
    a = np.tanh(u)
    return a, u, squashed_log_prob(mean, log_std, u, a)
