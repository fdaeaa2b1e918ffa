"""Empirical observation normalization with Welford-style running stats."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CLIP = 10.0
EPS = 1e-8


@dataclass
class Normalizer:
    dim: int
    count: float = 0.0
    mean: np.ndarray = None
    var: np.ndarray = None
    frozen: bool = False

    def __post_init__(self) -> None:
        if self.mean is None:
            self.mean = np.zeros(self.dim, dtype=np.float64)
        if self.var is None:
            self.var = np.zeros(self.dim, dtype=np.float64)

    def update(self, batch: np.ndarray) -> None:
        """Merge a batch into the running stats (parallel Welford merge)."""
        if self.frozen:
            return
        batch = np.asarray(batch, dtype=np.float64)
        n = batch.shape[0]
        if n == 0:
            return
        b_mean = batch.mean(axis=0)
        b_var = batch.var(axis=0)
        total = self.count + n
        delta = b_mean - self.mean
        new_mean = self.mean + delta * (n / total)
        m_a = self.var * self.count
        m_b = b_var * n
        new_var = (m_a + m_b + delta * delta * (self.count * n / total)) / total
        self.mean = new_mean
        self.var = new_var
        self.count = total

    def apply(self, batch: np.ndarray) -> np.ndarray:
        out = (np.asarray(batch) - self.mean) / np.sqrt(self.var + EPS)
        return np.clip(out, -CLIP, CLIP).astype(np.float32)

    def unapply(self, batch: np.ndarray) -> np.ndarray:
        return np.asarray(batch) * np.sqrt(self.var + EPS) + self.mean

    def copy(self) -> "Normalizer":
        return Normalizer(
            dim=self.dim, count=self.count, mean=self.mean.copy(),
            var=self.var.copy(), frozen=self.frozen,
        )


def norm_update_apply(norm: Normalizer, batch: np.ndarray) -> np.ndarray:
    """Update running stats (unless frozen), then normalize and clip."""
    if batch.shape[-1] != norm.dim:
        raise ValueError(f"batch dim {batch.shape[-1]} != normalizer dim {norm.dim}")
    norm.update(batch)
    return norm.apply(batch)
