"""Operator entry point: reproducible runs over the whole pipeline.

Subcommands: prepare, textualize, train-mllm, train, eval, bench.
Exit codes: 0 success, 2 config error, 3 data error, 4 I/O error.
Identical config and seeds produce byte-identical artifacts (wall-clock
benchmark output aside).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import checkpoint as ckpt
from .collab import CollabConfig
from .config import RunConfig, apply_setting, load_config_file, resolved_lines
from .data import (Dataset, EXTRA_TEXT_COLUMN, LABEL_COLUMN,
                   categorical_fields, load_dataset, split)
from .errors import (BindingError, ConfigError, DataParseError, DimensionError,
                     DomainError, ElecError, MetricUndefinedError, SchemaError,
                     StoreCorruptError, StoreFormatError)
from .metrics import bench_inference, evaluate_scores
from .mllm import (MllmAdapter, TextEmbeddingStore, bind_adapter,
                   build_hash_store, load_embedding_store, mllm_forward,
                   train_mllm)
from .siamese import (GainNetwork, VanillaNetwork, train_joint)
from .textualize import textualize_dataset, textualize_sample

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_IO = 4

_DATA_ERRORS = (SchemaError, DataParseError, BindingError, DomainError,
                DimensionError, MetricUndefinedError)
_IO_ERRORS = (StoreFormatError, StoreCorruptError, OSError)


def _build_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        cfg = load_config_file(args.config, cfg)
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        apply_setting(cfg, key.strip(), value)
    if args.out:
        cfg.out_dir = args.out
    return cfg


def _prepare_outdir(cfg: RunConfig) -> Path:
    out = cfg.out_path()
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(resolved_lines(cfg), encoding="utf-8")
    return out


def _load_and_split(cfg: RunConfig):
    dataset = load_dataset(cfg.data_csv, cfg.schema())
    parts = split(dataset, cfg.split_ratios, cfg.split_seed)
    return dataset, dict(zip(("train", "val", "test"), parts))


def _texts_in_id_order(dataset: Dataset) -> list[str]:
    order = np.argsort(dataset.ids, kind="stable")
    return [textualize_sample(dataset.sample(int(i)), dataset.schema).text
            for i in order]


def _build_store(cfg: RunConfig, dataset: Dataset) -> TextEmbeddingStore:
    if cfg.store_path:
        store = load_embedding_store(cfg.store_path)
    else:
        store = build_hash_store(_texts_in_id_order(dataset),
                                 cfg.store_hash_dim, cfg.store_hash_seed)
    store.validate_for(dataset)
    return store


def _adapter_ckpt_path(cfg: RunConfig) -> Path:
    return Path(cfg.adapter_checkpoint) if cfg.adapter_checkpoint \
        else cfg.out_path() / "adapter.ckpt"


def _load_adapter(cfg: RunConfig, store: TextEmbeddingStore) -> MllmAdapter:
    tag, meta, records = ckpt.load_checkpoint(_adapter_ckpt_path(cfg))
    if tag != "adapter":
        raise StoreFormatError(f"expected an adapter checkpoint, got tag {tag!r}")
    dims = tuple(int(d) for d in meta["dims"].split(",") if d)
    adapter = MllmAdapter(int(meta["in_dim"]), dims, np.random.default_rng(0))
    ckpt.load_into(adapter.params(), records)
    bind_adapter(adapter, store)
    return adapter


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_prepare(cfg: RunConfig) -> int:
    """Raw CSV -> canonical dataset CSV + split manifest.

    A `rating` column (configurable name) is converted to a binary label:
    ratings greater than 3 become 1, everything else 0. Rows that fail to
    parse are counted and skipped; past prepare.max_bad_rows the run aborts.
    """
    if not cfg.prepare_raw:
        raise ConfigError("prepare.raw is required for prepare")
    schema = cfg.schema()
    out = _prepare_outdir(cfg)

    with open(cfg.prepare_raw, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{cfg.prepare_raw}: empty file, missing header") from None
        col_of = {name: i for i, name in enumerate(header)}
        for f in schema:
            if f.name not in col_of:
                raise SchemaError(f"{cfg.prepare_raw}: missing column {f.name!r}")
        rating_col = col_of.get(cfg.prepare_rating_column)
        label_col = col_of.get(LABEL_COLUMN)
        if rating_col is None and label_col is None:
            raise SchemaError(
                f"{cfg.prepare_raw}: need a {cfg.prepare_rating_column!r} "
                f"or {LABEL_COLUMN!r} column")
        extra_col = col_of.get(EXTRA_TEXT_COLUMN)

        bad = 0
        kept: list[list[str]] = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                bad += 1
            else:
                try:
                    if rating_col is not None:
                        label = "1" if float(row[rating_col].strip()) > 3.0 else "0"
                    else:
                        label = row[label_col].strip()
                        if label not in ("0", "1"):
                            raise ValueError(label)
                except ValueError:
                    bad += 1
                else:
                    rec = [row[col_of[f.name]] for f in schema]
                    if extra_col is not None:
                        rec.append(row[extra_col])
                    rec.append(label)
                    kept.append(rec)
                    continue
            if bad > cfg.prepare_max_bad_rows:
                raise DataParseError(
                    f"{cfg.prepare_raw}: aborted at line {lineno}: "
                    f"{bad} malformed rows (limit {cfg.prepare_max_bad_rows})")

    dataset_path = out / "dataset.csv"
    with open(dataset_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        head = [f.name for f in schema]
        if extra_col is not None:
            head.append(EXTRA_TEXT_COLUMN)
        head.append(LABEL_COLUMN)
        writer.writerow(head)
        writer.writerows(kept)

    cfg.data_csv = str(dataset_path)
    dataset = load_dataset(dataset_path, schema)
    parts = split(dataset, cfg.split_ratios, cfg.split_seed)
    manifest = {
        "ratios": list(cfg.split_ratios),
        "seed": cfg.split_seed,
        "sizes": {"train": parts[0].size, "val": parts[1].size, "test": parts[2].size},
        "ids": {name: ds.ids.tolist()
                for name, ds in zip(("train", "val", "test"), parts)},
    }
    (out / "splits.json").write_text(
        json.dumps(manifest, sort_keys=True) + "\n", encoding="utf-8")
    print(f"prepared {dataset.size} rows ({bad} malformed skipped) -> {dataset_path}")
    print(f"splits {manifest['sizes']} -> {out / 'splits.json'}")
    return EXIT_OK


def cmd_textualize(cfg: RunConfig) -> int:
    out = _prepare_outdir(cfg)
    dataset = load_dataset(cfg.data_csv, cfg.schema())
    path = out / "texts.tsv"
    count = textualize_dataset(dataset, path)
    print(f"wrote {count} lines -> {path}")
    return EXIT_OK


def cmd_train_mllm(cfg: RunConfig) -> int:
    out = _prepare_outdir(cfg)
    dataset, parts = _load_and_split(cfg)
    store = _build_store(cfg, dataset)
    result = train_mllm(parts["train"], store, cfg.stage_one_config())
    path = out / "adapter.ckpt"
    ckpt.save_checkpoint(path, "adapter", result.adapter.params(), meta={
        "in_dim": str(result.adapter.in_dim),
        "dims": ",".join(str(d) for d in result.adapter.dims),
        "seed": str(cfg.adapter_seed),
    })
    trace_path = out / "mllm_loss.log"
    trace_path.write_text(
        "".join(f"epoch={i} loss={v!r}\n" for i, v in enumerate(result.loss_trace)),
        encoding="utf-8")
    last = result.loss_trace[-1] if result.loss_trace else float("nan")
    print(f"stage-1 adapter trained ({cfg.adapter_epochs} epochs, "
          f"final loss {last:.6f}) -> {path}")
    return EXIT_OK


def cmd_train(cfg: RunConfig) -> int:
    out = _prepare_outdir(cfg)
    dataset, parts = _load_and_split(cfg)
    store = _build_store(cfg, dataset)
    adapter = _load_adapter(cfg, store)
    result = train_joint(parts["train"], parts["val"], adapter, store,
                         cfg.collab_config(), cfg.train_config())
    meta = {"variant": cfg.collab_variant,
            "embedding_dim": str(cfg.collab_embedding_dim),
            "deep_dims": ",".join(str(d) for d in cfg.collab_deep_dims),
            "cross_layers": str(cfg.collab_cross_layers),
            "seed": str(cfg.train_seed),
            "best_epoch": str(result.best_epoch)}
    ckpt.save_checkpoint(out / "gain.ckpt", "gain",
                         result.gain.trainable_params(), meta)
    ckpt.save_checkpoint(out / "vanilla.ckpt", "vanilla",
                         result.vanilla.trainable_params(), meta)
    (out / "metrics.log").write_text(
        "".join(m.to_line() + "\n" for m in result.trace), encoding="utf-8")
    if result.trace:
        final = result.trace[result.best_epoch if result.best_epoch >= 0 else -1]
        print(f"joint training done; best epoch {result.best_epoch} "
              f"val_auc={final.val_auc:.4f} val_logloss={final.val_logloss:.4f}")
    print(f"checkpoints -> {out / 'gain.ckpt'}, {out / 'vanilla.ckpt'}")
    return EXIT_OK


def _rebuild_model(cfg: RunConfig, which: str, dataset: Dataset,
                   store: Optional[TextEmbeddingStore]):
    caps = [f.vocab_capacity for f in categorical_fields(dataset.schema)]
    collab = cfg.collab_config()
    path = Path(cfg.eval_checkpoint) if cfg.eval_checkpoint \
        else cfg.out_path() / f"{which}.ckpt"
    tag, _, records = ckpt.load_checkpoint(path)
    if tag != which:
        raise StoreFormatError(f"{path}: expected tag {which!r}, got {tag!r}")
    if which == "vanilla":
        net = VanillaNetwork(collab, caps, np.random.default_rng(0))
        ckpt.load_into(net.trainable_params(), records)
        return net
    assert store is not None
    adapter = _load_adapter(cfg, store)
    net = GainNetwork(collab, caps, adapter, store, np.random.default_rng(0))
    ckpt.load_into(net.trainable_params(), records)
    return net


def _model_scores(cfg: RunConfig, which: str, dataset: Dataset, part: Dataset,
                  store: Optional[TextEmbeddingStore]) -> np.ndarray:
    if which == "adapter":
        adapter = _load_adapter(cfg, store)
        return mllm_forward(adapter, store.get(part.ids))[1]
    net = _rebuild_model(cfg, which, dataset, store)
    if which == "vanilla":
        return net.predict(part.features)
    return net.predict(part.features, part.ids)


def cmd_eval(cfg: RunConfig) -> int:
    out = _prepare_outdir(cfg)
    dataset, parts = _load_and_split(cfg)
    if cfg.eval_split not in parts:
        raise ConfigError(f"eval.split must be train/val/test, got {cfg.eval_split!r}")
    if cfg.eval_model not in ("vanilla", "gain", "adapter"):
        raise ConfigError(f"eval.model must be vanilla/gain/adapter, got {cfg.eval_model!r}")
    part = parts[cfg.eval_split]
    store = None
    if cfg.eval_model in ("gain", "adapter"):
        store = _build_store(cfg, dataset)
    scores = _model_scores(cfg, cfg.eval_model, dataset, part, store)
    report = evaluate_scores(part.labels, scores, cfg.train_eps_p)
    print(report.to_text())
    path = out / f"eval_{cfg.eval_model}_{cfg.eval_split}.txt"
    path.write_text(report.to_machine_lines() + "\n", encoding="utf-8")
    print(f"report -> {path}")
    return EXIT_OK


def cmd_bench(cfg: RunConfig) -> int:
    out = _prepare_outdir(cfg)
    dataset, parts = _load_and_split(cfg)
    if cfg.bench_model not in ("vanilla", "gain"):
        raise ConfigError(f"bench.model must be vanilla/gain, got {cfg.bench_model!r}")
    part = parts["test"]
    n = min(cfg.bench_samples, part.size)
    if n < 1:
        raise DomainError("bench needs at least one test sample")
    store = _build_store(cfg, dataset) if cfg.bench_model == "gain" else None
    net = _rebuild_model(cfg, cfg.bench_model, dataset, store)
    stats = bench_inference(
        net, part.features[:n],
        part.ids[:n] if cfg.bench_model == "gain" else None,
        repetitions=cfg.bench_repetitions)
    lines = [
        f"model {cfg.bench_model}",
        f"samples {stats.samples}",
        f"repetitions {stats.repetitions}",
        f"latency_mean_s {stats.mean_s!r}",
        f"latency_p50_s {stats.p50_s!r}",
        f"latency_p99_s {stats.p99_s!r}",
        f"store_accesses_per_run {stats.store_accesses_per_run}",
    ]
    text = "\n".join(lines)
    print(text)
    (out / f"bench_{cfg.bench_model}.txt").write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


_COMMANDS = {
    "prepare": cmd_prepare,
    "textualize": cmd_textualize,
    "train-mllm": cmd_train_mllm,
    "train": cmd_train,
    "eval": cmd_eval,
    "bench": cmd_bench,
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elec",
        description="Train and evaluate the gain/vanilla CTR pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        doc = (fn.__doc__ or "").strip().splitlines()
        p = sub.add_parser(name, help=doc[0] if doc else name)
        p.add_argument("--config", "-c", help="key = value config file")
        p.add_argument("--set", "-s", action="append", metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.add_argument("--out", "-o", help="output directory (overrides out.dir)")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _build_config(args)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except _IO_ERRORS as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ElecError as exc:  # anything else package-specific
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
