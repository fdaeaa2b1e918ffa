"""Dense actor/critic networks with exact hand-written gradients.

Parameters are plain numpy arrays in a value-semantic record; forward
passes cache pre-activations so the matching backward returns exact
reverse-mode gradients of any scalar loss, given the upstream gradient at
the output. Hidden activations are ELU (alpha=1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Arch:
    input_dim: int
    hidden_dims: tuple[int, ...]
    output_dim: int
    activation: str = "elu"

    def __post_init__(self) -> None:
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        if any(d <= 0 for d in dims):
            raise ValueError(f"all layer dims must be positive, got {dims}")
        if self.activation != "elu":
            raise ValueError("only elu is supported")

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden_dims, self.output_dim]
        return [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]


@dataclass
class ModelParams:
    """Weights (out x in), biases, and a per-action log-std vector."""

    layers: list[tuple[np.ndarray, np.ndarray]]
    log_std: np.ndarray
    arch: Arch
    version: int = 0

    def copy(self) -> "ModelParams":
        return ModelParams(
            layers=[(w.copy(), b.copy()) for w, b in self.layers],
            log_std=self.log_std.copy(),
            arch=self.arch,
            version=self.version,
        )

    def flat(self) -> np.ndarray:
        """All parameters (including log_std) as one float vector."""
        parts = [a.ravel() for w, b in self.layers for a in (w, b)]
        parts.append(self.log_std.ravel())
        return np.concatenate(parts)

    def with_flat(self, vec: np.ndarray) -> "ModelParams":
        """A copy with parameters replaced from a flat vector."""
        out = self.copy()
        i = 0
        new_layers = []
        for w, b in out.layers:
            new_w = vec[i : i + w.size].reshape(w.shape).astype(w.dtype)
            i += w.size
            new_b = vec[i : i + b.size].reshape(b.shape).astype(b.dtype)
            i += b.size
            new_layers.append((new_w, new_b))
        out.layers = new_layers
        out.log_std = vec[i : i + out.log_std.size].reshape(
            out.log_std.shape
        ).astype(out.log_std.dtype)
        i += out.log_std.size
        assert i == len(vec)
        return out


@dataclass
class Grads:
    """Gradient record congruent to ModelParams."""

    layers: list[tuple[np.ndarray, np.ndarray]]
    log_std: np.ndarray

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "Grads":
        return cls(
            layers=[(np.zeros_like(w), np.zeros_like(b)) for w, b in params.layers],
            log_std=np.zeros_like(params.log_std),
        )

    def flat(self) -> np.ndarray:
        parts = [a.ravel() for w, b in self.layers for a in (w, b)]
        parts.append(self.log_std.ravel())
        return np.concatenate(parts)

    def add_(self, other: "Grads") -> None:
        for (w, b), (ow, ob) in zip(self.layers, other.layers):
            w += ow
            b += ob
        self.log_std += other.log_std

    def global_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(a * a))
                                 for w, b in self.layers for a in (w, b))
                             + float(np.sum(self.log_std ** 2))))

    def scale_(self, factor: float) -> None:
        for w, b in self.layers:
            w *= factor
            b *= factor
        self.log_std *= factor


def init_params(
    arch: Arch,
    seed: int,
    init_noise_std: float = 1.0,
    dtype=np.float32,
) -> ModelParams:
    """He-style scaled-uniform fan-in init; log_std = ln(init_noise_std)."""
    rng = np.random.default_rng(seed)
    layers = []
    for out_dim, in_dim in arch.layer_dims:
        bound = np.sqrt(1.0 / in_dim)
        w = rng.uniform(-bound, bound, (out_dim, in_dim)).astype(dtype)
        b = np.zeros(out_dim, dtype=dtype)
        layers.append((w, b))
    log_std = np.full(arch.output_dim, np.log(init_noise_std), dtype=dtype)
    return ModelParams(layers=layers, log_std=log_std, arch=arch, version=0)


def _elu(x: np.ndarray) -> np.ndarray:
    # x>0: x; x<=0: expm1(x). The lower clamp is output-invariant (expm1
    # rounds to -1.0 below -60 in f32 and f64) but keeps libm off its slow
    # underflow path.
    return np.expm1(np.clip(x, -60.0, 0)) + np.maximum(x, 0)


def _elu_grad_from_act(act: np.ndarray) -> np.ndarray:
    # elu'(x) = 1 for x > 0, exp(x) = elu(x) + 1 otherwise
    return np.minimum(act, 0) + 1.0


@dataclass
class ForwardCache:
    x: np.ndarray
    pre_acts: list[np.ndarray] = field(default_factory=list)
    acts: list[np.ndarray] = field(default_factory=list)


def forward(params: ModelParams, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Batched forward pass; returns (output B x out, cache for backward)."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[1] != params.arch.input_dim:
        raise ValueError(
            f"obs shape {x.shape} incompatible with input_dim "
            f"{params.arch.input_dim}"
        )
    cache = ForwardCache(x=x)
    h = x
    n_layers = len(params.layers)
    for i, (w, b) in enumerate(params.layers):
        z = h @ w.T + b
        cache.pre_acts.append(z)
        if i < n_layers - 1:
            h = _elu(z)
            cache.acts.append(h)
        else:
            h = z
    return h, cache


def backward(
    params: ModelParams, cache: ForwardCache, dout: np.ndarray
) -> tuple[np.ndarray, Grads]:
    """Exact reverse-mode gradients from the upstream output gradient.

    Returns (dL/dx, parameter grads). log_std grads are zero here; losses
    that touch log_std add them separately.
    """
    if dout.shape != cache.pre_acts[-1].shape:
        raise ValueError("upstream grad shape does not match cached forward")
    grads = Grads.zeros_like(params)
    # match the parameter dtype so float32 training never upcasts the matmuls
    dh = np.asarray(dout, dtype=cache.pre_acts[-1].dtype)
    n_layers = len(params.layers)
    for i in range(n_layers - 1, -1, -1):
        w, _ = params.layers[i]
        inp = cache.x if i == 0 else cache.acts[i - 1]
        gw, gb = grads.layers[i]
        gw += dh.T @ inp
        gb += dh.sum(axis=0)
        dh = dh @ w
        if i > 0:
            dh = dh * _elu_grad_from_act(cache.acts[i - 1])
    return dh, grads


def value_forward(params: ModelParams, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Forward for a scalar-output critic; squeezes the last axis."""
    out, cache = forward(params, x)
    return out[:, 0], cache
