"""Domain-randomization lifecycle: provider sampling, capability filtering,
reset payloads, and interval perturbation plans.

The task-side provider samples whatever the config enables; the backend
advertises which physical fields it can apply; the filter drops the rest
with a logged skip record. Randomization therefore rides the same sparse
reset / vectorized step lifecycle that already controls state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .task import DRConfig

logger = logging.getLogger(__name__)

# Per-field trailing shape of reset payload arrays (leading dim = len(env_ids)).
FIELD_DIMS: dict[str, tuple[int, ...]] = {
    "mass_delta": (),
    "com_offset": (2,),
}


class BackendCapabilities:
    """Immutable sets of randomization fields a backend can apply."""

    def __init__(self, supported_reset_fields, supported_interval_fields):
        self._reset = frozenset(supported_reset_fields)
        self._interval = frozenset(supported_interval_fields)

    @property
    def supported_reset_fields(self) -> frozenset[str]:
        return self._reset

    @property
    def supported_interval_fields(self) -> frozenset[str]:
        return self._interval

    def __repr__(self) -> str:
        return (
            f"BackendCapabilities(reset={sorted(self._reset)}, "
            f"interval={sorted(self._interval)})"
        )


@dataclass
class ResetPayload:
    """Per-env randomization values applied during a sparse reset."""

    env_ids: np.ndarray
    fields: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.env_ids = np.asarray(self.env_ids, dtype=np.int64)
        n = len(self.env_ids)
        for name, values in self.fields.items():
            arr = np.asarray(values, dtype=np.float64)
            if arr.shape[0] != n:
                raise ValueError(
                    f"payload field {name!r} leading dim {arr.shape[0]} != "
                    f"len(env_ids) {n}"
                )
            self.fields[name] = arr


@dataclass
class SkipRecord:
    field: str
    n_envs: int
    reason: str


@dataclass
class PushPlan:
    """Velocity deltas to stage before the next physics step; may be empty."""

    env_ids: np.ndarray
    delta_v: np.ndarray  # (len(env_ids), vdim)

    @classmethod
    def empty(cls, vdim: int) -> "PushPlan":
        return cls(np.zeros(0, dtype=np.int64), np.zeros((0, vdim)))

    def __len__(self) -> int:
        return len(self.env_ids)


def sample_reset_payload(
    dr: DRConfig,
    caps: BackendCapabilities,
    env_ids,
    rngs,
) -> ResetPayload:
    """Sample reset-time randomization for the listed envs.

    Only fields that are both enabled (range configured) and supported by
    the backend are sampled; each env draws from its own stream. A field
    with a degenerate [x, x] range still produces a (constant) payload
    entry; a range of None keeps the field out of the payload.
    """
    env_ids = np.asarray(env_ids, dtype=np.int64)
    if len(env_ids) == 0:
        raise ValueError("env_ids must be nonempty")
    fields: dict[str, np.ndarray] = {}

    def uniform_per_env(lo: float, hi: float, shape: tuple[int, ...]) -> np.ndarray:
        out = np.empty((len(env_ids),) + shape, dtype=np.float64)
        for row, env_id in enumerate(env_ids):
            out[row] = rngs[env_id].uniform(lo, hi, size=shape)
        return out

    enabled = {
        "mass_delta": dr.reset_mass_delta_range,
        "com_offset": dr.reset_com_offset_range,
    }
    for name, bounds in enabled.items():
        if bounds is not None and name in caps.supported_reset_fields:
            fields[name] = uniform_per_env(bounds[0], bounds[1], FIELD_DIMS[name])

    return ResetPayload(env_ids=env_ids, fields=fields)


def filter_payload(
    payload: ResetPayload, caps: BackendCapabilities
) -> tuple[dict[str, np.ndarray], list[SkipRecord]]:
    """Split a payload into backend-applicable fields and skip records.

    Applied set = requested ∩ supported; every dropped field produces one
    skip record and a log line.
    """
    applied: dict[str, np.ndarray] = {}
    skipped: list[SkipRecord] = []
    for name, values in payload.fields.items():
        if name in caps.supported_reset_fields:
            applied[name] = values
        else:
            rec = SkipRecord(field=name, n_envs=len(payload.env_ids),
                             reason="unsupported by backend")
            skipped.append(rec)
            logger.info(
                "reset payload field %r skipped for %d env(s): %s",
                name, rec.n_envs, rec.reason,
            )
    return applied, skipped


def build_interval_plan(
    dr: DRConfig,
    global_step: int,
    env_mask,
    rngs,
    vdim: int = 2,
) -> PushPlan:
    """Push plan for the upcoming physics step.

    Nonempty only when pushes are enabled and global_step is a multiple of
    the configured interval; delta-v components are uniform in [-max, +max]
    per masked env, drawn from that env's own stream.
    """
    if global_step < 0:
        raise ValueError("global_step must be >= 0")
    if not dr.push_enabled or global_step % dr.push_interval_steps != 0:
        return PushPlan.empty(vdim)
    env_mask = np.asarray(env_mask, dtype=bool)
    env_ids = np.nonzero(env_mask)[0].astype(np.int64)
    if len(env_ids) == 0:
        return PushPlan.empty(vdim)
    max_dv = np.asarray(dr.push_max_delta_v, dtype=np.float64)[:vdim]
    delta_v = np.empty((len(env_ids), vdim))
    for row, env_id in enumerate(env_ids):
        delta_v[row] = rngs[env_id].uniform(-max_dv, max_dv)
    return PushPlan(env_ids=env_ids, delta_v=delta_v)
