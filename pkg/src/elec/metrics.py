"""Evaluation: AUC, LogLoss, and per-sample inference benchmarking."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import MetricUndefinedError


def _check_binary(labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    if not np.all((labels == 0) | (labels == 1)):
        raise MetricUndefinedError("labels must be binary")
    return labels.astype(np.int64)


def auc(labels, scores) -> float:
    """Probability a random positive outranks a random negative; ties 0.5.

    Rank-sum (Mann-Whitney) formulation with average ranks for ties,
    O(n log n).
    """
    labels = _check_binary(labels)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape != scores.shape or labels.ndim != 1:
        raise MetricUndefinedError("labels and scores must be matching 1-D arrays")
    n_pos = int(labels.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos < 1 or n_neg < 1:
        raise MetricUndefinedError("AUC needs at least one positive and one negative")
    _, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    starts = ends - counts + 1
    avg_ranks = (starts + ends) / 2.0
    rank_sum_pos = float(avg_ranks[inverse][labels == 1].sum())
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def logloss(labels, scores, eps: float = 1e-7) -> float:
    """Mean binary cross-entropy with probabilities clamped to [eps, 1-eps]."""
    labels = _check_binary(labels)
    if labels.size == 0:
        raise MetricUndefinedError("logloss of an empty input is undefined")
    p = np.clip(np.asarray(scores, dtype=np.float64), eps, 1.0 - eps)
    y = labels.astype(np.float64)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


@dataclass(frozen=True)
class LatencyStats:
    """Per-sample wall-clock seconds at batch size 1, plus store traffic."""

    mean_s: float
    p50_s: float
    p99_s: float
    store_accesses_per_run: int
    samples: int
    repetitions: int


@dataclass
class EvalReport:
    auc: float
    logloss: float
    n_pos: int
    n_neg: int
    latency: Optional[LatencyStats] = None

    def to_text(self) -> str:
        lines = [
            f"auc      = {self.auc:.4f}",
            f"logloss  = {self.logloss:.4f}",
            f"n_pos    = {self.n_pos}",
            f"n_neg    = {self.n_neg}",
        ]
        if self.latency is not None:
            lines += [
                f"latency_mean_s = {self.latency.mean_s:.6f}",
                f"latency_p50_s  = {self.latency.p50_s:.6f}",
                f"latency_p99_s  = {self.latency.p99_s:.6f}",
                f"store_accesses_per_run = {self.latency.store_accesses_per_run}",
            ]
        return "\n".join(lines)

    def to_machine_lines(self) -> str:
        pairs = [("auc", repr(self.auc)), ("logloss", repr(self.logloss)),
                 ("n_pos", str(self.n_pos)), ("n_neg", str(self.n_neg))]
        if self.latency is not None:
            pairs += [("latency_mean_s", repr(self.latency.mean_s)),
                      ("latency_p50_s", repr(self.latency.p50_s)),
                      ("latency_p99_s", repr(self.latency.p99_s)),
                      ("store_accesses_per_run",
                       str(self.latency.store_accesses_per_run))]
        return "\n".join(f"{k} {v}" for k, v in pairs)


def evaluate_scores(labels, scores, eps: float = 1e-7) -> EvalReport:
    labels = _check_binary(labels)
    return EvalReport(
        auc=auc(labels, scores),
        logloss=logloss(labels, scores, eps),
        n_pos=int(labels.sum()),
        n_neg=int(labels.size - labels.sum()),
    )


def bench_inference(net, field_ids: np.ndarray,
                    sample_ids: Optional[np.ndarray] = None,
                    repetitions: int = 10, warmup: int = 1) -> LatencyStats:
    """Time single-sample predictions over `repetitions` passes.

    `net` needs a ``predict(field_ids[, sample_ids])`` method; if it
    carries an embedding store, accesses per run are measured from the
    store's counter. Warm-up passes are excluded from the statistics.
    """
    if repetitions < 1:
        raise MetricUndefinedError("repetitions must be >= 1")
    field_ids = np.asarray(field_ids)
    n = field_ids.shape[0]
    store = getattr(net, "store", None)

    def one_run(record: Optional[list]) -> None:
        for i in range(n):
            sid = None if sample_ids is None else np.asarray(sample_ids)[i:i + 1]
            t0 = time.perf_counter()
            if sid is None:
                net.predict(field_ids[i:i + 1])
            else:
                net.predict(field_ids[i:i + 1], sid)
            if record is not None:
                record.append(time.perf_counter() - t0)

    for _ in range(warmup):
        one_run(None)
    times: list[float] = []
    before = store.access_count if store is not None else 0
    for _ in range(repetitions):
        one_run(times)
    accessed = (store.access_count - before) if store is not None else 0
    per_run, rem = divmod(accessed, repetitions)
    if rem:
        raise MetricUndefinedError("store access count varied across runs")
    arr = np.asarray(times)
    return LatencyStats(
        mean_s=float(arr.mean()),
        p50_s=float(np.percentile(arr, 50)),
        p99_s=float(np.percentile(arr, 99)),
        store_accesses_per_run=int(per_run),
        samples=n,
        repetitions=repetitions,
    )
