"""Run configuration, metrics CSV, run-directory layout, and the final report."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

from ..algos import AppoConfig, PpoConfig, SacConfig
from ..envcore import TaskConfig
from ..replaypath import VARIANTS, TransferCostModel

ALGOS = ("ppo", "appo", "sac", "flashsac")


@dataclass
class RunConfig:
    task: TaskConfig
    algo: str = "ppo"
    backend: str = "pointmass"
    ppo: PpoConfig | None = None
    appo: AppoConfig | None = None
    sac: SacConfig | None = None
    num_envs: int = 256
    steps_per_env: int = 24
    max_iterations: int = 150
    env_steps_per_sync: int = 1
    seed: int = 1
    variant: str = "baseline"
    trace_enabled: bool = True
    deterministic: bool = False
    hidden_dims: tuple[int, ...] = (64, 64)
    init_noise_std: float = 1.0
    learner_pad_ms: float = 0.0
    save_interval: int = 100
    cost_model: TransferCostModel = field(default_factory=TransferCostModel)
    out_dir: Path | None = None

    def __post_init__(self) -> None:
        if self.algo not in ALGOS:
            raise ValueError(f"algo must be one of {ALGOS}")
        for name in ("num_envs", "steps_per_env", "max_iterations",
                     "env_steps_per_sync", "save_interval"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.algo in ("sac", "flashsac"):
            if self.variant not in VARIANTS:
                raise ValueError(f"variant must be one of {VARIANTS}")
        if self.algo == "ppo" and self.ppo is None:
            self.ppo = PpoConfig()
        if self.algo == "appo" and self.appo is None:
            self.appo = AppoConfig()
        if self.algo in ("sac", "flashsac") and self.sac is None:
            self.sac = SacConfig()
        if self.out_dir is not None:
            self.out_dir = Path(self.out_dir)


@dataclass
class RunReport:
    total_env_steps: int = 0
    wall_time_s: float = 0.0
    retained_cycle_mean_ms: float | None = None
    env_steps_per_s: float = 0.0
    reward_curve: list[tuple[int, float]] = field(default_factory=list)
    kernel_curve: list[tuple[int, float]] = field(default_factory=list)
    staleness_stats: dict = field(default_factory=dict)
    env_steps_per_cycle: int | None = None
    trace_path: str | None = None
    metrics_path: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def final_reward(self) -> float:
        """Mean episode reward over the trailing tenth of iterations."""
        return self._tail_mean(self.reward_curve)

    @property
    def final_tracking_kernel(self) -> float:
        return self._tail_mean(self.kernel_curve)

    @staticmethod
    def _tail_mean(curve: list[tuple[int, float]]) -> float:
        if not curve:
            return float("nan")
        tail = curve[-max(1, len(curve) // 10):]
        vals = [v for _, v in tail if v == v]  # drop NaNs
        return sum(vals) / len(vals) if vals else float("nan")

    def render(self) -> str:
        lines = [
            "run report",
            f"  total env steps:   {self.total_env_steps}",
            f"  wall time:         {self.wall_time_s:.3f} s",
            f"  env steps/s:       {self.env_steps_per_s:.0f}",
            f"  final reward:      {self.final_reward:.4f}",
            f"  final kernel:      {self.final_tracking_kernel:.4f}",
        ]
        if self.retained_cycle_mean_ms is not None:
            lines.append(
                f"  retained cycle:    {self.retained_cycle_mean_ms:.3f} ms mean"
            )
        if self.env_steps_per_cycle is not None:
            lines.append(f"  env steps/cycle:   {self.env_steps_per_cycle}")
        if self.staleness_stats:
            lines.append(f"  staleness:         {self.staleness_stats}")
        if self.trace_path:
            lines.append(f"  trace:             {self.trace_path}")
        if self.metrics_path:
            lines.append(f"  metrics:           {self.metrics_path}")
        for key, value in self.extra.items():
            lines.append(f"  {key}: {value}")
        return "\n".join(lines) + "\n"


class MetricsWriter:
    """Append-only CSV of per-iteration training stats.

    Rows hold only deterministic quantities (no wall-clock columns), so two
    runs with identical seeds produce byte-identical files; timing lives in
    the trace and the report.
    """

    def __init__(self, path: Path | None, fieldnames: list[str]):
        self.path = path
        self.fieldnames = fieldnames
        self._rows: list[dict] = []
        self._fh = None
        self._writer = None
        if path is not None:
            self._fh = open(path, "w", newline="")
            self._writer = csv.DictWriter(self._fh, fieldnames=fieldnames)
            self._writer.writeheader()

    def write(self, row: dict) -> None:
        row = {k: row.get(k, "") for k in self.fieldnames}
        formatted = {
            k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()
        }
        self._rows.append(row)
        if self._writer is not None:
            self._writer.writerow(formatted)
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    @property
    def rows(self) -> list[dict]:
        return self._rows


class RunClock:
    def __init__(self):
        self.start = time.perf_counter()

    def elapsed(self) -> float:
        return time.perf_counter() - self.start
