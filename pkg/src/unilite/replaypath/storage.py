"""CPU replay storage: an append-only ring of fixed-width rows.

Rows are identified by absolute monotone indices; the readable window is
[write_head - size, write_head). Samplers copy rows eagerly, so later
inserts can never mutate a sampled batch.
"""

from __future__ import annotations

import threading

import numpy as np

from ..traceview import Tracer


class RowCodec:
    """Packs (obs, action, reward, next_obs, terminated, n_used) rows."""

    def __init__(self, obs_dim: int, action_dim: int):
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.width = 2 * obs_dim + action_dim + 3

    def encode(self, obs, action, reward, next_obs, terminated, n_used) -> np.ndarray:
        n = len(obs)
        rows = np.empty((n, self.width), dtype=np.float32)
        d, a = self.obs_dim, self.action_dim
        rows[:, :d] = obs
        rows[:, d : d + a] = action
        rows[:, d + a] = reward
        rows[:, d + a + 1 : 2 * d + a + 1] = next_obs
        rows[:, 2 * d + a + 1] = np.asarray(terminated, dtype=np.float32)
        rows[:, 2 * d + a + 2] = np.asarray(n_used, dtype=np.float32)
        return rows

    def decode(self, rows: np.ndarray) -> dict:
        d, a = self.obs_dim, self.action_dim
        return {
            "obs": rows[:, :d],
            "action": rows[:, d : d + a],
            "reward": rows[:, d + a].astype(np.float64),
            "next_obs": rows[:, d + a + 1 : 2 * d + a + 1],
            "terminated": rows[:, 2 * d + a + 1] > 0.5,
            "n_used": rows[:, 2 * d + a + 2].astype(np.int64),
        }


class ReplayStorage:
    def __init__(self, capacity: int, row_width: int,
                 tracer: Tracer | None = None, track: str = "collector"):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.row_width = row_width
        self.write_head = 0
        self._data = np.zeros((capacity, row_width), dtype=np.float32)
        self._tracer = tracer if tracer is not None else Tracer(enabled=False)
        self._track = track
        # one writer (collector), one sampler (packer); the mutex keeps a
        # sample's index window and row copy consistent against eviction
        self._mutex = threading.Lock()

    @property
    def size(self) -> int:
        return min(self.write_head, self.capacity)

    @property
    def row_bytes(self) -> int:
        return self.row_width * 4

    def valid_range(self) -> tuple[int, int]:
        """Absolute [lo, hi) of rows currently readable."""
        return max(0, self.write_head - self.capacity), self.write_head

    def insert(self, rows: np.ndarray) -> None:
        """Append a batch of rows; oldest rows are logically evicted when
        the ring wraps."""
        rows = np.asarray(rows, dtype=np.float32)
        if rows.ndim != 2 or rows.shape[1] != self.row_width:
            raise ValueError(
                f"row width {rows.shape} incompatible with layout "
                f"width {self.row_width}"
            )
        n = len(rows)
        with self._tracer.span(self._track, "collector/replay_add",
                               rows=n, bytes=int(rows.nbytes)):
            with self._mutex:
                if n >= self.capacity:
                    # only the tail survives; keep abs-index -> slot mapping
                    tail = rows[-self.capacity:]
                    abs_ids = np.arange(self.write_head + n - self.capacity,
                                        self.write_head + n)
                    self._data[abs_ids % self.capacity] = tail
                else:
                    start = self.write_head % self.capacity
                    end = start + n
                    if end <= self.capacity:
                        self._data[start:end] = rows
                    else:
                        split = self.capacity - start
                        self._data[start:] = rows[:split]
                        self._data[: end - self.capacity] = rows[split:]
                self.write_head += n

    def _read_rows_locked(self, indices: np.ndarray) -> np.ndarray:
        lo, hi = self.valid_range()
        if len(indices) and (indices.min() < lo or indices.max() >= hi):
            raise IndexError(f"row indices outside valid window [{lo}, {hi})")
        return self._data[indices % self.capacity].copy()

    def read_rows(self, indices: np.ndarray) -> np.ndarray:
        """Copy rows by absolute index; indices must be in the valid window."""
        indices = np.asarray(indices, dtype=np.int64)
        with self._mutex:
            return self._read_rows_locked(indices)

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform-with-replacement absolute indices over the current window."""
        lo, hi = self.valid_range()
        if hi == lo:
            raise ValueError("replay empty")
        return rng.integers(lo, hi, size=batch_size)

    def snapshot_sample(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        """Sample and copy a batch; uniform with replacement over the rows
        valid at the snapshot instant."""
        with self._mutex:
            lo, hi = self.valid_range()
            if hi == lo:
                raise ValueError("replay empty")
            indices = rng.integers(lo, hi, size=batch_size)
            return self._read_rows_locked(indices)
