"""Frozen text-embedding store plus the trainable adaptation head.

The store decouples the engine from any particular text encoder: it
holds one pooled vector per sample id, written offline. The adapter (a
transformation MLP and a sigmoid prediction layer) is the only part that
trains in stage 1; in stage 2 it is frozen and only its transformation
output is injected into the gain network.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .data import Dataset, batches
from .errors import (BindingError, ConfigError, DimensionError,
                     StoreCorruptError, StoreFormatError)
from .nn import IDENTITY, MLP, RELU, SIGMOID, Adam, Dense, Parameter

STORE_MAGIC = b"ELEC"
STORE_VERSION = 1
_HEADER = struct.Struct("<4sIQI")  # magic, version u32, count u64, dim u32

DEFAULT_TRANSFORM_DIMS = (512, 256, 128)


class TextEmbeddingStore:
    """Per-sample-id text vectors; float32 on disk, float64 in memory.

    Row reads go through :meth:`get`, which counts accesses - the
    efficiency tests assert the vanilla inference path performs zero
    reads.
    """

    def __init__(self, rows: np.ndarray):
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2:
            raise DimensionError(f"store rows must be [count, dim], got {rows.shape}")
        if rows.shape[0] > 0 and rows.shape[1] < 1:
            raise DimensionError("store dim must be >= 1")
        self.rows = rows
        self.access_count = 0

    @property
    def count(self) -> int:
        return int(self.rows.shape[0])

    @property
    def dim(self) -> int:
        return int(self.rows.shape[1])

    def get(self, ids: np.ndarray) -> np.ndarray:
        ids = np.atleast_1d(np.asarray(ids))
        if ids.size and (ids.min() < 0 or ids.max() >= self.count):
            raise BindingError(
                f"sample id out of store range (count={self.count})")
        self.access_count += int(ids.size)
        return self.rows[ids]

    def reset_access_count(self) -> None:
        self.access_count = 0

    def validate_for(self, dataset: Dataset) -> None:
        """Binding check: every dataset sample id must have a store row."""
        if dataset.size == 0:
            return
        top = int(dataset.ids.max())
        if top >= self.count:
            raise BindingError(
                f"store has {self.count} rows but dataset references id {top}")


def write_store(path, rows: np.ndarray) -> None:
    """Write the binary store: ELEC magic, version, count, dim, f32 rows."""
    rows32 = np.ascontiguousarray(np.asarray(rows), dtype="<f4")
    if rows32.ndim != 2:
        raise DimensionError(f"store rows must be [count, dim], got {rows32.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(STORE_MAGIC, STORE_VERSION,
                              rows32.shape[0], rows32.shape[1]))
        fh.write(rows32.tobytes(order="C"))


def load_embedding_store(path) -> TextEmbeddingStore:
    """Load and validate a store file; truncated payloads are rejected."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise StoreFormatError(f"{path}: truncated header")
        magic, version, count, dim = _HEADER.unpack(head)
        if magic != STORE_MAGIC:
            raise StoreFormatError(f"{path}: bad magic {magic!r}")
        if version != STORE_VERSION:
            raise StoreFormatError(f"{path}: unsupported version {version}")
        payload = fh.read()
    expected = count * dim * 4
    if len(payload) != expected:
        raise StoreCorruptError(
            f"{path}: expected {expected} payload bytes, got {len(payload)}")
    rows = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    return TextEmbeddingStore(rows.astype(np.float64))


def _token_hash(token: str, seed: int, purpose: bytes) -> int:
    salt = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8,
                             salt=salt, person=purpose).digest()
    return int.from_bytes(digest, "little")


def hash_embed(text: str, dim: int, seed: int) -> np.ndarray:
    """Deterministic bag-of-tokens embedding: signed hashing, L2-normalized.

    A stand-in for a real encoder so the engine runs with no model files;
    identical (text, dim, seed) produce identical bytes on any platform.
    """
    if dim < 1:
        raise ConfigError("hash_embed dim must be >= 1")
    vec = np.zeros(dim, dtype=np.float64)
    for token in text.split():
        idx = _token_hash(token, seed, b"elec.hidx") % dim
        sign = 1.0 if _token_hash(token, seed, b"elec.hsgn") & 1 else -1.0
        vec[idx] += sign
    norm = np.sqrt(float(vec @ vec))
    if norm > 0.0:
        vec /= norm
    return vec


def build_hash_store(texts: Sequence[str], dim: int, seed: int) -> TextEmbeddingStore:
    rows = np.zeros((len(texts), dim), dtype=np.float64)
    for i, text in enumerate(texts):
        rows[i] = hash_embed(text, dim, seed)
    # Round through f32 so the fallback matches a written-then-loaded store.
    return TextEmbeddingStore(rows.astype(np.float32).astype(np.float64))


class MllmAdapter:
    """Transformation MLP (relu hidden, identity out) plus sigmoid prediction."""

    def __init__(self, in_dim: int, dims: Sequence[int] = DEFAULT_TRANSFORM_DIMS,
                 rng: Optional[np.random.Generator] = None, name: str = "adapter"):
        if rng is None:
            rng = np.random.default_rng(0)
        dims = tuple(int(d) for d in dims)
        if not dims:
            raise ConfigError("adapter needs at least one transformation dim")
        self.in_dim = int(in_dim)
        self.dims = dims
        self.transformation = MLP(self.in_dim, dims, rng, f"{name}.transform",
                                  hidden_activation=RELU, final_activation=IDENTITY)
        self.prediction = Dense(dims[-1], 1, SIGMOID, rng, f"{name}.predict")
        self.rep_dim = dims[-1]

    def params(self) -> list[Parameter]:
        return self.transformation.params() + self.prediction.params()

    def freeze(self) -> None:
        for p in self.params():
            p.frozen = True

    def frozen(self) -> bool:
        return all(p.frozen for p in self.params())

    def transform(self, e: np.ndarray):
        """Embedding batch -> (high-level representation, ctx)."""
        return self.transformation.forward(self._check_width(e))

    def forward(self, e: np.ndarray):
        rep, t_ctx = self.transform(e)
        p2, p_ctx = self.prediction.forward(rep)
        return rep, p2[:, 0], (t_ctx, p_ctx)

    def backward(self, ctx, d_p: np.ndarray) -> None:
        t_ctx, p_ctx = ctx
        d_rep = self.prediction.backward(p_ctx, d_p[:, None])
        self.transformation.backward(t_ctx, d_rep)

    def _check_width(self, e: np.ndarray) -> np.ndarray:
        e = np.asarray(e, dtype=np.float64)
        if e.ndim != 2 or e.shape[1] != self.in_dim:
            raise DimensionError(
                f"adapter expects embeddings of width {self.in_dim}, got {e.shape}")
        return e


def bind_adapter(adapter: MllmAdapter, store: TextEmbeddingStore) -> None:
    if adapter.in_dim != store.dim:
        raise BindingError(
            f"adapter input width {adapter.in_dim} != store dim {store.dim}")


def mllm_forward(adapter: MllmAdapter, e: np.ndarray
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Text embedding(s) -> (representation, click probability)."""
    single = np.asarray(e).ndim == 1
    eb = np.asarray(e, dtype=np.float64)
    if single:
        eb = eb[None, :]
    rep, p, _ = adapter.forward(eb)
    if single:
        return rep[0], p[0]
    return rep, p


@dataclass(frozen=True)
class StageOneConfig:
    """Stage-1 hyperparameters (adapter-only training)."""

    lr: float = 1e-3
    batch_size: int = 256
    epochs: int = 5
    seed: int = 11
    dims: tuple[int, ...] = DEFAULT_TRANSFORM_DIMS
    eps_p: float = 1e-7


@dataclass
class StageOneResult:
    adapter: MllmAdapter
    loss_trace: list = field(default_factory=list)


def train_mllm(dataset: Dataset, store: TextEmbeddingStore,
               config: StageOneConfig = StageOneConfig(),
               adapter: Optional[MllmAdapter] = None) -> StageOneResult:
    """Stage 1: fit only the adapter's new parameters with BCE on CTR labels.

    The store is read-only throughout; returns the adapter with a
    per-epoch mean-loss trace.
    """
    from .siamese import bce_loss_grad  # local import avoids a cycle

    store.validate_for(dataset)
    if adapter is None:
        adapter = MllmAdapter(store.dim, config.dims,
                              np.random.default_rng([config.seed, 1]))
    bind_adapter(adapter, store)
    optimizer = Adam(adapter.params(), lr=config.lr)
    trace: list[float] = []
    for epoch in range(config.epochs):
        loss_sum = 0.0
        for batch in batches(dataset, config.batch_size,
                             shuffle_seed=config.seed * 1_000_003 + epoch):
            idx = batch.indices
            e = store.get(dataset.ids[idx])
            y = dataset.labels[idx]
            _, p, ctx = adapter.forward(e)
            loss, d_p = bce_loss_grad(p, y, config.eps_p)
            adapter.backward(ctx, d_p)
            optimizer.step()
            loss_sum += loss * batch.size
        trace.append(loss_sum / max(dataset.size, 1))
    return StageOneResult(adapter=adapter, loss_trace=trace)
