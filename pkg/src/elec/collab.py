"""Collaborative CTR models: per-field embeddings feeding a DNN or DCNv2.

Both variants share one contract: a batch of tabular field ids maps to a
high-level representation (the last deep-layer output) and a click
probability. The DCNv2 variant runs a stacked full-matrix cross network
on the concatenated embeddings before the deep MLP; with zero cross
layers it degenerates exactly to the DNN.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DimensionError
from .nn import (MLP, RELU, SIGMOID, Dense, Embedding, Parameter,
                 glorot_uniform)

VARIANT_DNN = "dnn"
VARIANT_DCNV2 = "dcnv2"


@dataclass(frozen=True)
class CollabConfig:
    embedding_dim: int = 32
    deep_dims: tuple[int, ...] = (256, 128, 64)
    cross_layers: int = 2
    variant: str = VARIANT_DCNV2

    def __post_init__(self):
        if self.embedding_dim < 1:
            raise ConfigError("embedding_dim must be >= 1")
        if not self.deep_dims:
            raise ConfigError("deep_dims must be nonempty")
        if self.cross_layers < 0:
            raise ConfigError("cross_layers must be >= 0")
        if self.variant not in (VARIANT_DNN, VARIANT_DCNV2):
            raise ConfigError(f"unknown collab variant {self.variant!r}")
        object.__setattr__(self, "deep_dims", tuple(int(d) for d in self.deep_dims))

    @property
    def d_rep(self) -> int:
        return self.deep_dims[-1]


def cross_layer(x0: np.ndarray, xl: np.ndarray, w: np.ndarray,
                b: np.ndarray) -> np.ndarray:
    """One cross interaction: x0 * (W xl + b) + xl, elementwise product."""
    x0 = np.asarray(x0, dtype=np.float64)
    xl = np.asarray(xl, dtype=np.float64)
    if x0.shape != xl.shape or x0.shape[-1] != w.shape[0] or w.shape[0] != w.shape[1] \
            or b.shape[-1] != w.shape[0]:
        raise DimensionError(
            f"cross_layer width mismatch: x0 {x0.shape}, xl {xl.shape}, "
            f"W {w.shape}, b {b.shape}")
    return x0 * (xl @ w.T + b) + xl


class CrossLayer:
    def __init__(self, dim: int, rng: np.random.Generator, name: str):
        self.dim = dim
        self.weight = Parameter(f"{name}.weight", glorot_uniform(rng, dim, dim, (dim, dim)))
        self.bias = Parameter(f"{name}.bias", np.zeros(dim))

    def params(self) -> list[Parameter]:
        return [self.weight, self.bias]

    def forward(self, x0: np.ndarray, xl: np.ndarray):
        u = xl @ self.weight.values.T + self.bias.values
        return x0 * u + xl, (x0, xl, u)

    def backward(self, ctx, dy: np.ndarray):
        x0, xl, u = ctx
        dx0 = dy * u
        du = dy * x0
        self.weight.grad += du.T @ xl
        self.bias.grad += du.sum(axis=0)
        dxl = du @ self.weight.values + dy
        return dx0, dxl


class CrossStack:
    """Stacked cross layers; x_{l+1} = x0 * (W_l x_l + b_l) + x_l with x_1 = x0."""

    def __init__(self, dim: int, n_layers: int, rng: np.random.Generator, name: str):
        self.layers = [CrossLayer(dim, rng, f"{name}.{i}") for i in range(n_layers)]

    def params(self) -> list[Parameter]:
        return [p for layer in self.layers for p in layer.params()]

    def forward(self, x0: np.ndarray):
        x = x0
        ctxs = []
        for layer in self.layers:
            x, ctx = layer.forward(x0, x)
            ctxs.append(ctx)
        return x, ctxs

    def backward(self, ctxs, dy: np.ndarray) -> np.ndarray:
        dx0_acc = np.zeros_like(dy)
        for layer, ctx in zip(reversed(self.layers), reversed(ctxs)):
            dx0, dy = layer.backward(ctx, dy)
            dx0_acc += dx0
        return dx0_acc + dy


class CollabModel:
    """Embedding & feature-interaction model over hashed categorical ids.

    ``include_head=False`` builds the representation stack only; the gain
    branch predicts after fusion instead of from its collab module.
    """

    def __init__(self, config: CollabConfig, field_capacities: Sequence[int],
                 rng: np.random.Generator, name: str = "collab",
                 include_head: bool = True):
        if not field_capacities:
            raise ConfigError("need at least one categorical field")
        self.config = config
        self.embeddings = [
            Embedding(cap, config.embedding_dim, rng, f"{name}.emb{i}")
            for i, cap in enumerate(field_capacities)
        ]
        self.x0_dim = len(field_capacities) * config.embedding_dim
        if config.variant == VARIANT_DCNV2:
            self.cross: Optional[CrossStack] = CrossStack(
                self.x0_dim, config.cross_layers, rng, f"{name}.cross")
        else:
            self.cross = None
        self.deep = MLP(self.x0_dim, config.deep_dims, rng, f"{name}.deep",
                        hidden_activation=RELU, final_activation=RELU)
        self.d_rep = config.d_rep
        self.head = Dense(self.d_rep, 1, SIGMOID, rng, f"{name}.head") \
            if include_head else None

    def params(self) -> list[Parameter]:
        out = [p for emb in self.embeddings for p in emb.params()]
        if self.cross is not None:
            out.extend(self.cross.params())
        out.extend(self.deep.params())
        if self.head is not None:
            out.extend(self.head.params())
        return out

    def forward(self, field_ids: np.ndarray):
        """field_ids [N, F] -> (h [N, d_rep], p [N] or None, ctx)."""
        field_ids = np.asarray(field_ids)
        if field_ids.ndim != 2 or field_ids.shape[1] != len(self.embeddings):
            raise DimensionError(
                f"expected [N, {len(self.embeddings)}] field ids, got {field_ids.shape}")
        emb_ctxs = []
        cols = []
        for j, emb in enumerate(self.embeddings):
            e, ctx = emb.forward(field_ids[:, j])
            cols.append(e)
            emb_ctxs.append(ctx)
        x0 = np.concatenate(cols, axis=1)
        if self.cross is not None:
            xc, cross_ctxs = self.cross.forward(x0)
        else:
            xc, cross_ctxs = x0, None
        h, deep_ctxs = self.deep.forward(xc)
        if self.head is not None:
            p2, head_ctx = self.head.forward(h)
            p = p2[:, 0]
        else:
            p, head_ctx = None, None
        return h, p, (emb_ctxs, cross_ctxs, deep_ctxs, head_ctx)

    def backward(self, ctx, d_p: Optional[np.ndarray] = None,
                 d_h: Optional[np.ndarray] = None) -> None:
        """Accumulate gradients from the probability and/or the representation."""
        emb_ctxs, cross_ctxs, deep_ctxs, head_ctx = ctx
        dh = None
        if d_p is not None:
            if self.head is None:
                raise DimensionError("model has no scoring head")
            dh = self.head.backward(head_ctx, np.asarray(d_p, dtype=np.float64)[:, None])
        if d_h is not None:
            dh = d_h if dh is None else dh + d_h
        if dh is None:
            return
        dxc = self.deep.backward(deep_ctxs, dh)
        dx0 = self.cross.backward(cross_ctxs, dxc) if self.cross is not None else dxc
        d = self.config.embedding_dim
        for j, emb in enumerate(self.embeddings):
            emb.backward(emb_ctxs[j], dx0[:, j * d:(j + 1) * d])


def collab_forward(model: CollabModel, field_ids: np.ndarray
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Contract entry point: tabular ids -> (representation, probability)."""
    if model.head is None:
        raise DimensionError("collab_forward requires a model with a scoring head")
    h, p, _ = model.forward(field_ids)
    return h, p
