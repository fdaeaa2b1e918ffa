"""Checkpoint files: npz archives holding params, normalizer stats, version.

Layout (stable):
  arch            json string: {input_dim, hidden_dims, output_dim, activation}
  version         scalar int
  layer{i}_w / layer{i}_b
  log_std
  norm_mean / norm_var / norm_count / norm_frozen   (present when a
                                                     normalizer is saved)
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .mlp import Arch, ModelParams
from .normalizer import Normalizer


def save_checkpoint(
    path, params: ModelParams, normalizer: Normalizer | None = None
) -> None:
    arrays: dict[str, np.ndarray] = {
        "arch": np.frombuffer(
            json.dumps(
                {
                    "input_dim": params.arch.input_dim,
                    "hidden_dims": list(params.arch.hidden_dims),
                    "output_dim": params.arch.output_dim,
                    "activation": params.arch.activation,
                }
            ).encode(),
            dtype=np.uint8,
        ),
        "version": np.array(params.version, dtype=np.int64),
        "log_std": params.log_std,
    }
    for i, (w, b) in enumerate(params.layers):
        arrays[f"layer{i}_w"] = w
        arrays[f"layer{i}_b"] = b
    if normalizer is not None:
        arrays["norm_mean"] = normalizer.mean
        arrays["norm_var"] = normalizer.var
        arrays["norm_count"] = np.array(normalizer.count)
        arrays["norm_frozen"] = np.array(normalizer.frozen)
    np.savez(path, **arrays)


def load_checkpoint(path) -> tuple[ModelParams, Normalizer | None]:
    with np.load(Path(path)) as data:
        meta = json.loads(bytes(data["arch"]).decode())
        arch = Arch(
            input_dim=int(meta["input_dim"]),
            hidden_dims=tuple(meta["hidden_dims"]),
            output_dim=int(meta["output_dim"]),
            activation=meta["activation"],
        )
        layers = []
        i = 0
        while f"layer{i}_w" in data:
            layers.append((data[f"layer{i}_w"].copy(), data[f"layer{i}_b"].copy()))
            i += 1
        params = ModelParams(
            layers=layers,
            log_std=data["log_std"].copy(),
            arch=arch,
            version=int(data["version"]),
        )
        normalizer = None
        if "norm_mean" in data:
            normalizer = Normalizer(
                dim=len(data["norm_mean"]),
                count=float(data["norm_count"]),
                mean=data["norm_mean"].copy(),
                var=data["norm_var"].copy(),
                frozen=bool(data["norm_frozen"]),
            )
    return params, normalizer
