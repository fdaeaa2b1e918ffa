"""Batched environment contract, toy backends, and the DR lifecycle."""

from .backends import BACKENDS, get_backend
from .dr import (
    BackendCapabilities,
    PushPlan,
    ResetPayload,
    SkipRecord,
    build_interval_plan,
    filter_payload,
    sample_reset_payload,
)
from .pool import EnvPool, StepBatch, materialize
from .rewards import joystick_reward, tracking_kernel
from .task import DRConfig, TaskConfig

__all__ = [
    "BACKENDS",
    "BackendCapabilities",
    "DRConfig",
    "EnvPool",
    "PushPlan",
    "ResetPayload",
    "SkipRecord",
    "StepBatch",
    "TaskConfig",
    "build_interval_plan",
    "filter_payload",
    "get_backend",
    "joystick_reward",
    "materialize",
    "sample_reset_payload",
    "tracking_kernel",
]
