"""Run configuration: a flat "key = value" file plus command-line overrides.

Grammar: one ``key = value`` per line, ``#`` starts a comment, blank
lines ignored. List values are comma-separated. The field schema is a
comma-separated list of ``name:kind[:capacity]`` with kind one of
``categorical``/``cat`` (capacity required) or ``text``/``passthrough``.
Every key has a documented default; resolved values are echoed into the
output directory for provenance.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path
from typing import Optional

from .collab import CollabConfig
from .data import FieldSchema, KIND_CATEGORICAL, KIND_TEXT, validate_schema
from .errors import ConfigError
from .mllm import StageOneConfig
from .siamese import TrainConfig

_KIND_TOKENS = {
    "categorical": KIND_CATEGORICAL, "cat": KIND_CATEGORICAL,
    "text": KIND_TEXT, "passthrough": KIND_TEXT,
}


def parse_fields_spec(spec: str) -> tuple[FieldSchema, ...]:
    out = []
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        parts = [p.strip() for p in item.split(":")]
        if len(parts) < 2:
            raise ConfigError(f"field spec {item!r} needs name:kind[:capacity]")
        name, kind_token = parts[0], parts[1].lower()
        if kind_token not in _KIND_TOKENS:
            raise ConfigError(f"field {name!r}: unknown kind {parts[1]!r}")
        kind = _KIND_TOKENS[kind_token]
        if kind == KIND_CATEGORICAL:
            if len(parts) != 3:
                raise ConfigError(f"categorical field {name!r} needs a capacity")
            try:
                cap = int(parts[2])
            except ValueError:
                raise ConfigError(f"field {name!r}: bad capacity {parts[2]!r}") from None
            out.append(FieldSchema(name, kind, cap))
        else:
            if len(parts) != 2:
                raise ConfigError(f"text field {name!r} takes no capacity")
            out.append(FieldSchema(name, kind, 1))
    return validate_schema(out)


def fields_spec_to_str(schema) -> str:
    parts = []
    for f in schema:
        if f.kind == KIND_CATEGORICAL:
            parts.append(f"{f.name}:categorical:{f.vocab_capacity}")
        else:
            parts.append(f"{f.name}:text")
    return ",".join(parts)


@dataclass
class RunConfig:
    """Everything one run needs; defaults are the documented values."""

    data_csv: str = ""
    fields: str = ""
    split_ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    split_seed: int = 7

    collab_variant: str = "dcnv2"
    collab_embedding_dim: int = 32
    collab_deep_dims: tuple[int, ...] = (256, 128, 64)
    collab_cross_layers: int = 2

    adapter_dims: tuple[int, ...] = (512, 256, 128)
    adapter_lr: float = 1e-3
    adapter_batch_size: int = 256
    adapter_epochs: int = 5
    adapter_seed: int = 11
    adapter_checkpoint: str = ""

    store_path: str = ""
    store_hash_dim: int = 64
    store_hash_seed: int = 1

    train_alpha: float = 1.0
    train_lr: float = 1e-3
    train_batch_size: int = 256
    train_epochs: int = 5
    train_seed: int = 17
    train_eps_p: float = 1e-7

    prepare_raw: str = ""
    prepare_rating_column: str = "rating"
    prepare_max_bad_rows: int = 100

    eval_split: str = "test"
    eval_model: str = "vanilla"
    eval_checkpoint: str = ""
    bench_model: str = "vanilla"
    bench_repetitions: int = 5
    bench_samples: int = 64

    out_dir: str = "runs/run1"

    def schema(self) -> tuple[FieldSchema, ...]:
        if not self.fields:
            raise ConfigError("data.fields is required")
        return parse_fields_spec(self.fields)

    def collab_config(self) -> CollabConfig:
        return CollabConfig(
            embedding_dim=self.collab_embedding_dim,
            deep_dims=tuple(self.collab_deep_dims),
            cross_layers=self.collab_cross_layers,
            variant=self.collab_variant,
        )

    def stage_one_config(self) -> StageOneConfig:
        return StageOneConfig(
            lr=self.adapter_lr, batch_size=self.adapter_batch_size,
            epochs=self.adapter_epochs, seed=self.adapter_seed,
            dims=tuple(self.adapter_dims), eps_p=self.train_eps_p)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            alpha=self.train_alpha, lr=self.train_lr,
            batch_size=self.train_batch_size, epochs=self.train_epochs,
            seed=self.train_seed, eps_p=self.train_eps_p)

    def out_path(self) -> Path:
        return Path(self.out_dir)


# key in file -> (attribute, parser)
def _to_int(v: str) -> int:
    return int(v)


def _to_float(v: str) -> float:
    return float(v)


def _to_str(v: str) -> str:
    return v


def _to_ints(v: str) -> tuple[int, ...]:
    return tuple(int(x.strip()) for x in v.split(",") if x.strip())


def _to_ratios(v: str) -> tuple[float, float, float]:
    parts = [float(x.strip()) for x in v.split(",") if x.strip()]
    if len(parts) != 3:
        raise ConfigError(f"split.ratios needs 3 values, got {len(parts)}")
    return (parts[0], parts[1], parts[2])


_KEYS = {
    "data.csv": ("data_csv", _to_str),
    "data.fields": ("fields", _to_str),
    "split.ratios": ("split_ratios", _to_ratios),
    "split.seed": ("split_seed", _to_int),
    "collab.variant": ("collab_variant", _to_str),
    "collab.embedding_dim": ("collab_embedding_dim", _to_int),
    "collab.deep_dims": ("collab_deep_dims", _to_ints),
    "collab.cross_layers": ("collab_cross_layers", _to_int),
    "adapter.dims": ("adapter_dims", _to_ints),
    "adapter.lr": ("adapter_lr", _to_float),
    "adapter.batch_size": ("adapter_batch_size", _to_int),
    "adapter.epochs": ("adapter_epochs", _to_int),
    "adapter.seed": ("adapter_seed", _to_int),
    "adapter.checkpoint": ("adapter_checkpoint", _to_str),
    "store.path": ("store_path", _to_str),
    "store.hash_dim": ("store_hash_dim", _to_int),
    "store.hash_seed": ("store_hash_seed", _to_int),
    "train.alpha": ("train_alpha", _to_float),
    "train.lr": ("train_lr", _to_float),
    "train.batch_size": ("train_batch_size", _to_int),
    "train.epochs": ("train_epochs", _to_int),
    "train.seed": ("train_seed", _to_int),
    "train.eps_p": ("train_eps_p", _to_float),
    "prepare.raw": ("prepare_raw", _to_str),
    "prepare.rating_column": ("prepare_rating_column", _to_str),
    "prepare.max_bad_rows": ("prepare_max_bad_rows", _to_int),
    "eval.split": ("eval_split", _to_str),
    "eval.model": ("eval_model", _to_str),
    "eval.checkpoint": ("eval_checkpoint", _to_str),
    "bench.model": ("bench_model", _to_str),
    "bench.repetitions": ("bench_repetitions", _to_int),
    "bench.samples": ("bench_samples", _to_int),
    "out.dir": ("out_dir", _to_str),
}

_ATTR_TO_KEY = {attr: key for key, (attr, _) in _KEYS.items()}


def apply_setting(cfg: RunConfig, key: str, value: str) -> None:
    if key not in _KEYS:
        raise ConfigError(f"unknown config key {key!r}")
    attr, parse = _KEYS[key]
    try:
        setattr(cfg, attr, parse(value.strip()))
    except (ValueError, TypeError):
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def load_config_file(path, cfg: Optional[RunConfig] = None) -> RunConfig:
    cfg = cfg or RunConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}: line {lineno}: expected key = value")
        apply_setting(cfg, key.strip(), value)
    return cfg


def resolved_lines(cfg: RunConfig) -> str:
    """All keys with their resolved values, one per line, stable order."""
    out = []
    for f in dc_fields(cfg):
        key = _ATTR_TO_KEY[f.name]
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        out.append(f"{key} = {value}")
    return "\n".join(sorted(out)) + "\n"
