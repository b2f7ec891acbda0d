"""LLM-empowered CTR prediction with an efficient tabular-only serving path.

Pipeline: adapt a frozen text encoder's pooled embeddings for CTR
(stage 1), fuse them into a collaborative gain network, distill score
and representation knowledge into a vanilla network (stage 2), and serve
the vanilla network alone.
"""

from .collab import CollabConfig, CollabModel, collab_forward, cross_layer
from .data import (Batch, Dataset, FieldSchema, Sample, batches,
                   load_dataset, split)
from .metrics import EvalReport, LatencyStats, auc, bench_inference, logloss
from .mllm import (MllmAdapter, StageOneConfig, TextEmbeddingStore,
                   build_hash_store, hash_embed, load_embedding_store,
                   mllm_forward, train_mllm, write_store)
from .siamese import (GainNetwork, LossBreakdown, NetworkOutputs, TrainConfig,
                      VanillaNetwork, bce_loss, clid_loss, gain_forward,
                      infer_vanilla, rep_loss, total_loss, train_joint,
                      train_vanilla, vanilla_forward)
from .textualize import TextualizedSample, textualize_dataset, textualize_sample

__all__ = [
    "Batch", "CollabConfig", "CollabModel", "Dataset", "EvalReport",
    "FieldSchema", "GainNetwork", "LatencyStats", "LossBreakdown",
    "MllmAdapter", "NetworkOutputs", "Sample", "StageOneConfig",
    "TextEmbeddingStore", "TextualizedSample", "TrainConfig",
    "VanillaNetwork", "auc", "batches", "bce_loss", "bench_inference",
    "build_hash_store", "clid_loss", "collab_forward", "cross_layer",
    "gain_forward", "hash_embed", "infer_vanilla", "load_dataset",
    "load_embedding_store", "logloss", "mllm_forward", "rep_loss", "split",
    "textualize_dataset", "textualize_sample", "total_loss", "train_joint",
    "train_mllm", "train_vanilla", "vanilla_forward", "write_store",
]

__version__ = "0.1.0"
