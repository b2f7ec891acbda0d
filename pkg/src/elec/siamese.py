"""Gain/vanilla network pair, distillation losses, and joint training.

The gain network fuses its collaborative representation with the frozen
adapter's text representation (vector concatenation, then one relu
projection back to the collab width) and is the teacher. The vanilla
network is the tabular-only student and the sole component used at
inference. Distillation runs at two levels per mini-batch:

* score level - cross-entropy between the batch-normalized score
  distributions of teacher and student (each probability divided by its
  batch sum), which transfers ranking without destroying calibration;
* representation level - mean squared distance between the branches'
  high-level representation vectors.

Teacher quantities are constants inside both distillation terms, so
those losses move only the vanilla network.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .collab import CollabConfig, CollabModel
from .data import Dataset, batches, categorical_fields
from .errors import ConfigError, DimensionError, DomainError
from .metrics import auc, logloss
from .mllm import MllmAdapter, TextEmbeddingStore, bind_adapter
from .nn import RELU, SIGMOID, Adam, Dense, Parameter


@dataclass(frozen=True)
class TrainConfig:
    """Stage-2 hyperparameters; alpha balances the representation term."""

    alpha: float = 1.0
    lr: float = 1e-3
    batch_size: int = 256
    epochs: int = 5
    seed: int = 17
    eps_p: float = 1e-7

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigError("alpha must be >= 0")
        if not (0.0 < self.eps_p < 0.5):
            raise ConfigError("eps_p must lie in (0, 0.5)")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")


@dataclass
class NetworkOutputs:
    """Per-sample branch outputs for one batch."""

    p_g: np.ndarray
    p_v: np.ndarray
    h_g: np.ndarray
    h_v: np.ndarray


@dataclass(frozen=True)
class LossBreakdown:
    l_gain: float
    l_van: float
    l_score: float
    l_rep: float
    l_total: float


# ---------------------------------------------------------------------------
# Losses. Each *_grad variant returns (value, gradient wrt the student input);
# teacher inputs are treated as constants.
# ---------------------------------------------------------------------------

def _clamp(p: np.ndarray, eps: float) -> np.ndarray:
    return np.clip(np.asarray(p, dtype=np.float64), eps, 1.0 - eps)


def bce_loss(p: np.ndarray, y: np.ndarray, eps: float = 1e-7) -> float:
    """Mean binary cross-entropy; probabilities are clamped away from {0,1}."""
    y = np.asarray(y, dtype=np.float64)
    if y.size == 0:
        raise DomainError("bce_loss: empty batch")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise DomainError("bce_loss: labels must be binary")
    pc = _clamp(p, eps)
    return float(-np.mean(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)))


def bce_loss_grad(p: np.ndarray, y: np.ndarray, eps: float = 1e-7
                  ) -> tuple[float, np.ndarray]:
    y = np.asarray(y, dtype=np.float64)
    if not np.all((y == 0.0) | (y == 1.0)):
        raise DomainError("bce_loss: labels must be binary")
    p = np.asarray(p, dtype=np.float64)
    pc = _clamp(p, eps)
    n = y.size
    loss = float(-np.mean(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)))
    inside = (p > eps) & (p < 1.0 - eps)
    grad = np.where(inside, -(y / pc - (1.0 - y) / (1.0 - pc)) / n, 0.0)
    return loss, grad


def listwise_distribution(p: np.ndarray, eps: float = 1e-7) -> np.ndarray:
    """Normalize batch probabilities to a distribution (each over the batch sum)."""
    pc = _clamp(p, eps)
    return pc / pc.sum()


def clid_loss(p_g: np.ndarray, p_v: np.ndarray, eps: float = 1e-7) -> float:
    """Calibration-compatible listwise distillation score loss.

    Cross-entropy between the teacher's and student's batch-normalized
    score distributions, scaled by 1/N. Gradients (see
    :func:`clid_loss_grad`) flow only into the student probabilities.
    """
    return clid_loss_grad(p_g, p_v, eps)[0]


def clid_loss_grad(p_g: np.ndarray, p_v: np.ndarray, eps: float = 1e-7
                   ) -> tuple[float, np.ndarray]:
    p_g = np.asarray(p_g, dtype=np.float64)
    p_v = np.asarray(p_v, dtype=np.float64)
    if p_g.shape != p_v.shape or p_g.ndim != 1 or p_g.size < 1:
        raise DimensionError(
            f"clid_loss: need matching 1-D probability batches, got "
            f"{p_g.shape} and {p_v.shape}")
    for name, arr in (("teacher", p_g), ("student", p_v)):
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise DomainError(f"clid_loss: {name} probabilities outside [0, 1]")
    n = p_g.size
    q_g = listwise_distribution(p_g, eps)
    pvc = _clamp(p_v, eps)
    s_v = pvc.sum()
    q_v = pvc / s_v
    loss = float(-(q_g * np.log(q_v)).sum() / n) + 0.0
    inside = (p_v > eps) & (p_v < 1.0 - eps)
    grad = np.where(inside, -(q_g / pvc - 1.0 / s_v) / n, 0.0)
    return loss, grad


def rep_loss(h_g: np.ndarray, h_v: np.ndarray) -> float:
    """Mean (over the batch) squared distance between representations."""
    return rep_loss_grad(h_g, h_v)[0]


def rep_loss_grad(h_g: np.ndarray, h_v: np.ndarray
                  ) -> tuple[float, np.ndarray]:
    h_g = np.atleast_2d(np.asarray(h_g, dtype=np.float64))
    h_v = np.atleast_2d(np.asarray(h_v, dtype=np.float64))
    if h_g.shape != h_v.shape:
        raise DimensionError(
            f"rep_loss: shape mismatch {h_g.shape} vs {h_v.shape}")
    n = h_g.shape[0]
    diff = h_v - h_g
    loss = float((diff * diff).sum() / n)
    return loss, (2.0 / n) * diff


def total_loss(outputs: NetworkOutputs, y: np.ndarray,
               config: TrainConfig) -> LossBreakdown:
    """Combine both branch BCE terms with the two distillation terms."""
    l_gain = bce_loss(outputs.p_g, y, config.eps_p)
    l_van = bce_loss(outputs.p_v, y, config.eps_p)
    l_score = clid_loss(outputs.p_g, outputs.p_v, config.eps_p)
    l_rep = rep_loss(outputs.h_g, outputs.h_v)
    return LossBreakdown(
        l_gain=l_gain, l_van=l_van, l_score=l_score, l_rep=l_rep,
        l_total=l_gain + l_van + l_score + config.alpha * l_rep)


# ---------------------------------------------------------------------------
# Networks
# ---------------------------------------------------------------------------

class VanillaNetwork:
    """Tabular-only student; its prediction layer is its collab head."""

    def __init__(self, config: CollabConfig, field_capacities: Sequence[int],
                 rng: np.random.Generator):
        self.collab = CollabModel(config, field_capacities, rng,
                                  name="vanilla", include_head=True)
        self.prediction = self.collab.head
        self.d_rep = self.collab.d_rep

    def trainable_params(self) -> list[Parameter]:
        return self.collab.params()

    def forward(self, field_ids: np.ndarray):
        h, p, ctx = self.collab.forward(field_ids)
        return h, p, ctx

    def backward(self, ctx, d_p: Optional[np.ndarray],
                 d_h: Optional[np.ndarray] = None) -> None:
        self.collab.backward(ctx, d_p=d_p, d_h=d_h)

    def predict(self, field_ids: np.ndarray,
                sample_ids: Optional[np.ndarray] = None) -> np.ndarray:
        _, p, _ = self.forward(field_ids)
        return p


class GainNetwork:
    """Teacher branch: collab representation fused with the frozen text rep."""

    def __init__(self, config: CollabConfig, field_capacities: Sequence[int],
                 adapter: MllmAdapter, store: TextEmbeddingStore,
                 rng: np.random.Generator):
        bind_adapter(adapter, store)
        self.collab = CollabModel(config, field_capacities, rng,
                                  name="gain", include_head=False)
        self.d_rep = self.collab.d_rep
        self.fusion = Dense(self.d_rep + adapter.rep_dim, self.d_rep, RELU,
                            rng, "gain.fusion")
        self.prediction = Dense(self.d_rep, 1, SIGMOID, rng, "gain.head")
        self.adapter = adapter
        self.store = store

    def trainable_params(self) -> list[Parameter]:
        return (self.collab.params() + self.fusion.params()
                + self.prediction.params())

    def forward(self, field_ids: np.ndarray, sample_ids: np.ndarray):
        e = self.store.get(np.asarray(sample_ids))
        r, _ = self.adapter.transform(e)
        c, _, collab_ctx = self.collab.forward(field_ids)
        fused, fusion_ctx = self.fusion.forward(np.concatenate([c, r], axis=1))
        p2, head_ctx = self.prediction.forward(fused)
        return fused, p2[:, 0], (collab_ctx, fusion_ctx, head_ctx)

    def backward(self, ctx, d_p: np.ndarray) -> None:
        collab_ctx, fusion_ctx, head_ctx = ctx
        d_fused = self.prediction.backward(head_ctx, d_p[:, None])
        d_concat = self.fusion.backward(fusion_ctx, d_fused)
        # The adapter is frozen: the text-representation slice is dropped.
        self.collab.backward(collab_ctx, d_h=d_concat[:, :self.d_rep])

    def predict(self, field_ids: np.ndarray, sample_ids: np.ndarray) -> np.ndarray:
        _, p, _ = self.forward(field_ids, sample_ids)
        return p


def gain_forward(net: GainNetwork, field_ids: np.ndarray,
                 sample_ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    h, p, _ = net.forward(field_ids, sample_ids)
    return h, p


def vanilla_forward(net: VanillaNetwork, field_ids: np.ndarray
                    ) -> tuple[np.ndarray, np.ndarray]:
    h, p, _ = net.forward(field_ids)
    return h, p


def infer_vanilla(net: VanillaNetwork, field_ids: np.ndarray) -> np.ndarray:
    """Online inference path: student probabilities only, no store involved."""
    _, p, _ = net.forward(field_ids)
    return p


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass
class EpochMetrics:
    epoch: int
    l_gain: float
    l_van: float
    l_score: float
    l_rep: float
    l_total: float
    val_auc: float
    val_logloss: float

    def to_line(self) -> str:
        vals = (self.l_gain, self.l_van, self.l_score, self.l_rep, self.l_total,
                self.val_auc, self.val_logloss)
        keys = ("l_gain", "l_van", "l_score", "l_rep", "l_total",
                "val_auc", "val_logloss")
        body = " ".join(f"{k}={v!r}" for k, v in zip(keys, vals))
        return f"epoch={self.epoch} {body}"


@dataclass
class JointResult:
    gain: GainNetwork
    vanilla: VanillaNetwork
    trace: list[EpochMetrics] = field(default_factory=list)
    best_epoch: int = -1


@dataclass
class VanillaResult:
    vanilla: VanillaNetwork
    trace: list[EpochMetrics] = field(default_factory=list)
    best_epoch: int = -1


def _field_capacities(dataset: Dataset) -> list[int]:
    return [f.vocab_capacity for f in categorical_fields(dataset.schema)]


def _shuffle_seed(seed: int, epoch: int) -> int:
    return seed * 1_000_003 + epoch


def _epoch_val_scores(net, dataset: Dataset, batch_size: int,
                      with_store: bool = False) -> np.ndarray:
    out = np.zeros(dataset.size, dtype=np.float64)
    for b in batches(dataset, batch_size):
        idx = b.indices
        if with_store:
            out[idx] = net.predict(dataset.features[idx], dataset.ids[idx])
        else:
            out[idx] = net.predict(dataset.features[idx])
    return out


def _val_metrics(net, val: Dataset, batch_size: int, eps: float
                 ) -> tuple[float, float]:
    if val.size == 0 or len(np.unique(val.labels)) < 2:
        return float("nan"), float("nan")
    scores = _epoch_val_scores(net, val, batch_size)
    return auc(val.labels, scores), logloss(val.labels, scores, eps)


def _snapshot(params: Sequence[Parameter]) -> list[np.ndarray]:
    return [p.values.copy() for p in params]


def _restore(params: Sequence[Parameter], snap: Sequence[np.ndarray]) -> None:
    for p, v in zip(params, snap):
        p.values[...] = v


def train_joint(train: Dataset, val: Dataset, adapter: MllmAdapter,
                store: TextEmbeddingStore, collab_config: CollabConfig,
                config: TrainConfig) -> JointResult:
    """Train teacher and student jointly on the combined objective.

    The adapter is frozen throughout; the trainable set is both collab
    stacks, the fusion layer, and both prediction heads, updated in a
    single optimizer step per batch. Validation AUC/LogLoss (the
    student's - it is the serving model) are recorded per epoch, and the
    parameters from the best-validation-AUC epoch are returned.
    """
    store.validate_for(train)
    store.validate_for(val)
    adapter.freeze()
    caps = _field_capacities(train)
    vanilla = VanillaNetwork(collab_config, caps,
                             np.random.default_rng([config.seed, 1]))
    gain = GainNetwork(collab_config, caps, adapter, store,
                       np.random.default_rng([config.seed, 2]))
    params = gain.trainable_params() + vanilla.trainable_params()
    optimizer = Adam(params, lr=config.lr)

    result = JointResult(gain=gain, vanilla=vanilla)
    best_auc = -np.inf
    best_snap: Optional[list[np.ndarray]] = None
    for epoch in range(config.epochs):
        sums = np.zeros(5)
        for batch in batches(train, config.batch_size,
                             shuffle_seed=_shuffle_seed(config.seed, epoch)):
            idx = batch.indices
            feats = train.features[idx]
            y = train.labels[idx]
            h_g, p_g, gctx = gain.forward(feats, train.ids[idx])
            h_v, p_v, vctx = vanilla.forward(feats)

            l_gain, d_pg = bce_loss_grad(p_g, y, config.eps_p)
            l_van, d_pv = bce_loss_grad(p_v, y, config.eps_p)
            l_score, d_pv_clid = clid_loss_grad(p_g, p_v, config.eps_p)
            l_rep, d_hv = rep_loss_grad(h_g, h_v)

            gain.backward(gctx, d_pg)
            vanilla.backward(vctx, d_pv + d_pv_clid, config.alpha * d_hv)
            optimizer.step()

            l_total = l_gain + l_van + l_score + config.alpha * l_rep
            sums += batch.size * np.array([l_gain, l_van, l_score, l_rep, l_total])

        means = [float(v) for v in sums / max(train.size, 1)]
        val_auc, val_ll = _val_metrics(vanilla, val, config.batch_size, config.eps_p)
        result.trace.append(EpochMetrics(epoch, *means, val_auc, val_ll))
        if not np.isnan(val_auc) and val_auc > best_auc:
            best_auc = val_auc
            best_snap = _snapshot(params)
            result.best_epoch = epoch
    if best_snap is not None:
        _restore(params, best_snap)
    return result


def train_vanilla(train: Dataset, val: Dataset, collab_config: CollabConfig,
                  config: TrainConfig) -> VanillaResult:
    """Undistilled student baseline: BCE only, same init and batch order
    as the student inside :func:`train_joint` for the same seed."""
    caps = _field_capacities(train)
    vanilla = VanillaNetwork(collab_config, caps,
                             np.random.default_rng([config.seed, 1]))
    params = vanilla.trainable_params()
    optimizer = Adam(params, lr=config.lr)
    result = VanillaResult(vanilla=vanilla)
    best_auc = -np.inf
    best_snap: Optional[list[np.ndarray]] = None
    for epoch in range(config.epochs):
        loss_sum = 0.0
        for batch in batches(train, config.batch_size,
                             shuffle_seed=_shuffle_seed(config.seed, epoch)):
            idx = batch.indices
            _, p_v, vctx = vanilla.forward(train.features[idx])
            l_van, d_pv = bce_loss_grad(p_v, train.labels[idx], config.eps_p)
            vanilla.backward(vctx, d_pv)
            optimizer.step()
            loss_sum += l_van * batch.size
        mean_l = loss_sum / max(train.size, 1)
        val_auc, val_ll = _val_metrics(vanilla, val, config.batch_size, config.eps_p)
        result.trace.append(EpochMetrics(epoch, 0.0, mean_l, 0.0, 0.0, mean_l,
                                         val_auc, val_ll))
        if not np.isnan(val_auc) and val_auc > best_auc:
            best_auc = val_auc
            best_snap = _snapshot(params)
            result.best_epoch = epoch
    if best_snap is not None:
        _restore(params, best_snap)
    return result
