# The two binary artifacts: the embedding store and model checkpoints.
#
# Store layout: "ELEC" magic, u32 version, u64 count, u32 dim, then
# count x dim float32 little-endian rows in sample-id order. Checkpoints
# use a similar container with named per-parameter records. Both are
# 32-bit on disk and widened to float64 on load.

import tempfile
from pathlib import Path

import numpy as np

from elec.checkpoint import load_checkpoint, load_into, save_checkpoint
from elec.collab import CollabConfig
from elec.mllm import (build_hash_store, hash_embed, load_embedding_store,
                       write_store)
from elec.siamese import VanillaNetwork, infer_vanilla

workdir = Path(tempfile.mkdtemp(prefix="elec_demo_"))

# %% Hash embeddings: a deterministic, encoder-free stand-in. Each token
# flips one signed coordinate; the result is L2-normalized.
for text in ("gender is female", "gender is male", "gender is female"):
    v = hash_embed(text, dim=8, seed=3)
    print(f"{text!r:24} -> {np.round(v, 3)}")

# %% Store round trip is exact modulo the float32 cast.
rows = np.random.default_rng(0).normal(size=(4, 8))
store_path = workdir / "demo.store"
write_store(store_path, rows)
store = load_embedding_store(store_path)
print(f"\nloaded store: count={store.count} dim={store.dim}")
print("round-trip exact at f32:",
      bool(np.array_equal(store.rows, rows.astype(np.float32).astype(np.float64))))

head = store_path.read_bytes()[:20]
print(f"header bytes: magic={head[:4]!r} version={int.from_bytes(head[4:8], 'little')} "
      f"count={int.from_bytes(head[8:16], 'little')} dim={int.from_bytes(head[16:20], 'little')}")

texts = ["City is paris.", "City is oslo.", "City is paris."]
hashed = build_hash_store(texts, dim=8, seed=1)
print("identical texts share rows:",
      bool(np.array_equal(hashed.rows[0], hashed.rows[2])))

# %% Checkpoints: save a student network, rebuild a fresh one, load, and
# verify the predictions match to float32 precision.
cfg = CollabConfig(embedding_dim=4, deep_dims=(8, 6), cross_layers=1)
net = VanillaNetwork(cfg, [5, 7], np.random.default_rng(1))
ckpt_path = workdir / "vanilla.ckpt"
save_checkpoint(ckpt_path, "vanilla", net.trainable_params(),
                meta={"variant": "dcnv2"})

rebuilt = VanillaNetwork(cfg, [5, 7], np.random.default_rng(99))
tag, meta, records = load_checkpoint(ckpt_path)
load_into(rebuilt.trainable_params(), records)
print(f"\ncheckpoint tag={tag!r} meta={meta}")

feats = np.array([[1, 2], [4, 6], [0, 0]])
before = infer_vanilla(net, feats)
after = infer_vanilla(rebuilt, feats)
print("max |p_before - p_after| =", float(np.abs(before - after).max()),
      "(float32 storage)")
