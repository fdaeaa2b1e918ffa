"""The replay data path: CPU storage, pack slots, simulated device arena,
and the four replay-boundary variants (C, B, A, baseline)."""

from .arena import (
    DeviceArena,
    DeviceReplayCache,
    TransferAgent,
    TransferCostModel,
    TransferHandle,
    TransferQueueFull,
    arena_footprint,
    submit_transfer,
)
from .slots import (
    DeviceBatchSlot,
    HotColdPair,
    PackSlot,
    PackSlotPair,
    SlotState,
    SlotStateError,
    pack,
    swap_hot_cold,
)
from .storage import ReplayStorage, RowCodec

VARIANTS = ("C", "B", "A", "baseline")

__all__ = [
    "DeviceArena",
    "DeviceBatchSlot",
    "DeviceReplayCache",
    "HotColdPair",
    "PackSlot",
    "PackSlotPair",
    "ReplayStorage",
    "RowCodec",
    "SlotState",
    "SlotStateError",
    "TransferAgent",
    "TransferCostModel",
    "TransferHandle",
    "TransferQueueFull",
    "VARIANTS",
    "arena_footprint",
    "pack",
    "submit_transfer",
    "swap_hot_cold",
]
