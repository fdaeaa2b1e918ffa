"""Role orchestration for the three coupling regimes."""

from .appo_runner import run_appo
from .collect import EpisodeTracker, SegmentCollector
from .ppo_runner import run_ppo_sync
from .report import MetricsWriter, RunConfig, RunReport
from .sac_runner import SacPipeline, run_sac
from .sync import (
    ErrorBox,
    PipelineStall,
    RolloutRing,
    WeightSlot,
    fetch_weights,
    publish_weights,
)

__all__ = [
    "EpisodeTracker",
    "ErrorBox",
    "MetricsWriter",
    "PipelineStall",
    "RolloutRing",
    "RunConfig",
    "RunReport",
    "SacPipeline",
    "SegmentCollector",
    "WeightSlot",
    "fetch_weights",
    "publish_weights",
    "run_appo",
    "run_ppo_sync",
    "run_sac",
]
