"""Minimal deterministic neural-network substrate.

Everything runs in float64 with fixed-order reductions, so a fixed seed
reproduces training bitwise. Layers expose a functional contract:
``forward(x) -> (y, ctx)`` and ``backward(ctx, dy) -> dx``; parameter
gradients accumulate additively into ``Parameter.grad``.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DimensionError, DomainError

IDENTITY = "identity"
RELU = "relu"
SIGMOID = "sigmoid"
_ACTIVATIONS = (IDENTITY, RELU, SIGMOID)

# Keeps sigmoid outputs strictly inside (0, 1) at float64.
_SIGMOID_MARGIN = 1e-15


class Parameter:
    """A named trainable tensor with a gradient buffer and a freeze flag.

    Frozen parameters are skipped by the optimizer; their values stay
    bitwise constant for the whole training stage.
    """

    __slots__ = ("name", "values", "grad", "frozen")

    def __init__(self, name: str, values: np.ndarray, frozen: bool = False):
        self.name = name
        self.values = np.asarray(values, dtype=np.float64)
        self.grad = np.zeros_like(self.values)
        self.frozen = frozen

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Parameter({self.name!r}, shape={self.shape}, frozen={self.frozen})"


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int,
                   shape: Sequence[int]) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=tuple(shape))


def stable_sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function, output strictly in (0, 1)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return np.clip(out, _SIGMOID_MARGIN, 1.0 - _SIGMOID_MARGIN)


def _apply_activation(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == IDENTITY:
        return z
    if kind == RELU:
        return np.maximum(z, 0.0)
    if kind == SIGMOID:
        return stable_sigmoid(z)
    raise ValueError(f"unknown activation {kind!r}")


def _activation_grad(kind: str, z: np.ndarray, y: np.ndarray) -> np.ndarray:
    if kind == IDENTITY:
        return np.ones_like(z)
    if kind == RELU:
        return (z > 0.0).astype(np.float64)
    if kind == SIGMOID:
        return y * (1.0 - y)
    raise ValueError(f"unknown activation {kind!r}")


class Dense:
    """Fully connected layer: activation(W x + b), weight shape [out, in]."""

    def __init__(self, in_dim: int, out_dim: int, activation: str,
                 rng: np.random.Generator, name: str):
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.activation = activation
        self.weight = Parameter(f"{name}.weight",
                                glorot_uniform(rng, in_dim, out_dim, (out_dim, in_dim)))
        self.bias = Parameter(f"{name}.bias", np.zeros(out_dim))

    def params(self) -> list[Parameter]:
        return [self.weight, self.bias]

    def forward(self, x: np.ndarray):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise DimensionError(
                f"{self.weight.name}: expected input width {self.in_dim}, got {x.shape}")
        z = x @ self.weight.values.T + self.bias.values
        y = _apply_activation(self.activation, z)
        return y, (x, z, y)

    def backward(self, ctx, dy: np.ndarray) -> np.ndarray:
        x, z, y = ctx
        dy = np.asarray(dy, dtype=np.float64)
        if dy.shape != y.shape:
            raise DimensionError(
                f"{self.weight.name}: upstream grad shape {dy.shape} != output {y.shape}")
        dz = dy * _activation_grad(self.activation, z, y)
        self.weight.grad += dz.T @ x
        self.bias.grad += dz.sum(axis=0)
        return dz @ self.weight.values


class MLP:
    """Stack of Dense layers."""

    def __init__(self, in_dim: int, dims: Sequence[int], rng: np.random.Generator,
                 name: str, hidden_activation: str = RELU,
                 final_activation: str = RELU):
        if not dims:
            raise ValueError("MLP needs at least one layer dimension")
        self.layers: list[Dense] = []
        prev = in_dim
        for i, d in enumerate(dims):
            act = final_activation if i == len(dims) - 1 else hidden_activation
            self.layers.append(Dense(prev, d, act, rng, f"{name}.{i}"))
            prev = d
        self.out_dim = prev

    def params(self) -> list[Parameter]:
        return [p for layer in self.layers for p in layer.params()]

    def forward(self, x: np.ndarray):
        ctxs = []
        for layer in self.layers:
            x, ctx = layer.forward(x)
            ctxs.append(ctx)
        return x, ctxs

    def backward(self, ctxs, dy: np.ndarray) -> np.ndarray:
        for layer, ctx in zip(reversed(self.layers), reversed(ctxs)):
            dy = layer.backward(ctx, dy)
        return dy


class Embedding:
    """Lookup table [vocab, dim]; backward scatters rows additively in index order."""

    def __init__(self, vocab: int, dim: int, rng: np.random.Generator, name: str):
        self.vocab = vocab
        self.dim = dim
        self.table = Parameter(name, glorot_uniform(rng, vocab, dim, (vocab, dim)))

    def params(self) -> list[Parameter]:
        return [self.table]

    def forward(self, ids: np.ndarray):
        ids = np.asarray(ids)
        if ids.size and (ids.min() < 0 or ids.max() >= self.vocab):
            raise IndexError(
                f"{self.table.name}: id out of range for vocab {self.vocab}")
        return self.table.values[ids], ids

    def backward(self, ctx, dy: np.ndarray) -> None:
        ids = ctx
        np.add.at(self.table.grad, ids, dy)


def embedding_lookup(table: Parameter, ids: np.ndarray) -> np.ndarray:
    """Row gather from a standalone table parameter."""
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.values.shape[0]):
        raise IndexError(f"{table.name}: id out of range")
    return table.values[ids]


def embedding_backward(table: Parameter, ids: np.ndarray, dy: np.ndarray) -> None:
    np.add.at(table.grad, np.asarray(ids), dy)


def average_pool(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Elementwise mean of a nonempty list of equal-length vectors."""
    if len(vectors) == 0:
        raise DomainError("average_pool: empty input")
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError("average_pool: vectors must share one length")
    return arr.mean(axis=0)


class Adam:
    """Adam with bias correction. Frozen parameters are never updated."""

    def __init__(self, params: Iterable[Parameter], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self._m = [np.zeros_like(p.values) for p in self.params]
        self._v = [np.zeros_like(p.values) for p in self.params]

    def step(self) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self._m, self._v):
            if p.frozen:
                p.zero_grad()
                continue
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.values -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.epsilon)
            p.zero_grad()


def grad_check(fragment: Callable[[bool], float], params: Sequence[Parameter],
               step: float = 1e-5) -> float:
    """Compare analytic gradients with central finite differences.

    ``fragment(want_grad)`` maps the current parameter values to a scalar
    loss; when ``want_grad`` is true it must also accumulate analytic
    gradients into each parameter. Returns the worst relative error,
    |analytic - numeric| / max(|analytic|, |numeric|, 1e-3).
    """
    for p in params:
        p.zero_grad()
    fragment(True)
    analytic = [p.grad.copy() for p in params]
    worst = 0.0
    for p, ana in zip(params, analytic):
        flat = p.values.reshape(-1)
        aflat = ana.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            lp = fragment(False)
            flat[i] = orig - step
            lm = fragment(False)
            flat[i] = orig
            numeric = (lp - lm) / (2.0 * step)
            err = abs(aflat[i] - numeric) / max(abs(aflat[i]), abs(numeric), 1e-3)
            worst = max(worst, err)
        p.grad[...] = ana
    return worst
