"""Adam with bias correction and optional global grad-norm clipping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mlp import Grads, ModelParams


class DivergenceError(RuntimeError):
    """Raised when an update sees non-finite gradients or losses."""


@dataclass
class OptState:
    m: Grads
    v: Grads
    t: int = 0
    lr: float = 1e-3
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: ModelParams, lr: float) -> "OptState":
        return cls(m=Grads.zeros_like(params), v=Grads.zeros_like(params), lr=lr)


def clip_global_norm(grads_list: list[Grads], max_norm: float) -> float:
    """Scale all grads in place so their joint global norm is <= max_norm.

    No-op when max_norm <= 0. Returns the pre-clip norm.
    """
    total = float(np.sqrt(sum(g.global_norm() ** 2 for g in grads_list)))
    if max_norm > 0 and total > max_norm:
        factor = max_norm / (total + 1e-12)
        for g in grads_list:
            g.scale_(factor)
    return total


def adam_step(
    params: ModelParams,
    grads: Grads,
    opt: OptState,
    max_grad_norm: float = 0.0,
) -> tuple[ModelParams, OptState]:
    """One textbook Adam step; mutates and returns (params, opt).

    Clips the gradient global norm first when max_grad_norm > 0. Non-finite
    gradients raise DivergenceError.
    """
    flat = grads.flat()
    if not np.all(np.isfinite(flat)):
        raise DivergenceError("non-finite gradients in adam_step")
    if max_grad_norm > 0:
        clip_global_norm([grads], max_grad_norm)

    opt.t += 1
    b1, b2 = opt.betas
    bc1 = 1.0 - b1 ** opt.t
    bc2 = 1.0 - b2 ** opt.t

    def update(p: np.ndarray, g: np.ndarray, m: np.ndarray, v: np.ndarray) -> None:
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        m_hat = m / bc1
        v_hat = v / bc2
        p -= (opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps)).astype(p.dtype)

    for (w, b), (gw, gb), (mw, mb), (vw, vb) in zip(
        params.layers, grads.layers, opt.m.layers, opt.v.layers
    ):
        update(w, gw, mw, vw)
        update(b, gb, mb, vb)
    update(params.log_std, grads.log_std, opt.m.log_std, opt.v.log_std)
    return params, opt
