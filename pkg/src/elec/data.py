"""Tabular CTR dataset: schema, CSV ingestion, splitting, mini-batches.

Categorical feature values are encoded by stable hashing into a fixed
number of buckets per field, so train and test encode identically with
no fitted vocabulary artifact. Raw string values are retained alongside
the integer ids for text rendering.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import ConfigError, DataParseError, SchemaError

KIND_CATEGORICAL = "categorical"
KIND_TEXT = "text_passthrough"

LABEL_COLUMN = "label"
EXTRA_TEXT_COLUMN = "extra_text"


@dataclass(frozen=True)
class FieldSchema:
    """One input column: a hashed categorical field or raw text passthrough."""

    name: str
    kind: str = KIND_CATEGORICAL
    vocab_capacity: int = 1

    def __post_init__(self):
        if not self.name:
            raise SchemaError("field name must be nonempty")
        if self.kind not in (KIND_CATEGORICAL, KIND_TEXT):
            raise SchemaError(f"field {self.name!r}: unknown kind {self.kind!r}")
        if self.vocab_capacity < 1:
            raise SchemaError(f"field {self.name!r}: vocab_capacity must be >= 1")


def validate_schema(schema: Sequence[FieldSchema]) -> tuple[FieldSchema, ...]:
    schema = tuple(schema)
    names = [f.name for f in schema]
    if len(set(names)) != len(names):
        raise SchemaError("field names must be unique within a schema")
    if not any(f.kind == KIND_CATEGORICAL for f in schema):
        raise SchemaError("schema needs at least one categorical field")
    return schema


def categorical_fields(schema: Sequence[FieldSchema]) -> list[FieldSchema]:
    return [f for f in schema if f.kind == KIND_CATEGORICAL]


def stable_bucket(value: str, capacity: int) -> int:
    """Map a raw feature string to a bucket id, stable across runs and platforms."""
    digest = hashlib.blake2b(value.encode("utf-8"), digest_size=8,
                             person=b"elec.feat").digest()
    return int.from_bytes(digest, "little") % capacity


@dataclass(frozen=True)
class Sample:
    """One labeled record; ``features`` holds the hashed categorical ids."""

    id: int
    features: tuple[int, ...]
    raw_values: tuple[str, ...]
    label: int
    extra_text: Optional[str] = None


@dataclass
class Batch:
    """Positions into a dataset; the final batch of an epoch may be short."""

    indices: np.ndarray

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        if self.indices.size < 1:
            raise ConfigError("batch must contain at least one index")
        if np.unique(self.indices).size != self.indices.size:
            raise ConfigError("batch indices must be distinct")

    @property
    def size(self) -> int:
        return int(self.indices.size)


@dataclass
class Dataset:
    """Immutable-after-load collection of samples with columnar views.

    ``ids`` are the canonical sample ids: 0..M-1 for loader output, and
    preserved (not renumbered) in split subsets so one embedding store
    keyed by canonical id serves every split.
    """

    schema: tuple[FieldSchema, ...]
    ids: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    raw_values: list[tuple[str, ...]] = field(repr=False)
    extra_text: list[Optional[str]] = field(repr=False)

    @property
    def size(self) -> int:
        return int(self.ids.size)

    def sample(self, index: int) -> Sample:
        return Sample(
            id=int(self.ids[index]),
            features=tuple(int(v) for v in self.features[index]),
            raw_values=self.raw_values[index],
            label=int(self.labels[index]),
            extra_text=self.extra_text[index],
        )

    def __len__(self) -> int:
        return self.size

    def subset(self, indices: np.ndarray) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            schema=self.schema,
            ids=self.ids[idx].copy(),
            features=self.features[idx].copy(),
            labels=self.labels[idx].copy(),
            raw_values=[self.raw_values[i] for i in idx],
            extra_text=[self.extra_text[i] for i in idx],
        )


def _empty_dataset(schema: tuple[FieldSchema, ...]) -> Dataset:
    n_cat = len(categorical_fields(schema))
    return Dataset(
        schema=schema,
        ids=np.zeros(0, dtype=np.int64),
        features=np.zeros((0, n_cat), dtype=np.int64),
        labels=np.zeros(0, dtype=np.int64),
        raw_values=[],
        extra_text=[],
    )


def load_dataset(path, schema: Sequence[FieldSchema]) -> Dataset:
    """Load a UTF-8 CSV with a header row into a Dataset.

    The header must contain every schema field name plus ``label``;
    ``extra_text`` is optional. Categorical values are lowercased,
    trimmed and hashed into the field's bucket count; raw values are
    kept as read. Sample ids are assigned 0..M-1 in file order.
    """
    schema = validate_schema(schema)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, missing header row") from None

        col_of = {name: i for i, name in enumerate(header)}
        if len(col_of) != len(header):
            raise SchemaError(f"{path}: duplicate column names in header")
        for f in schema:
            if f.name not in col_of:
                raise SchemaError(f"{path}: missing column {f.name!r}")
        if LABEL_COLUMN not in col_of:
            raise SchemaError(f"{path}: missing column {LABEL_COLUMN!r}")
        known = {f.name for f in schema} | {LABEL_COLUMN, EXTRA_TEXT_COLUMN}
        for name in header:
            if name not in known:
                raise SchemaError(f"{path}: unknown column {name!r}")
        has_extra = EXTRA_TEXT_COLUMN in col_of

        cat_cols = [col_of[f.name] for f in schema if f.kind == KIND_CATEGORICAL]
        cat_caps = [f.vocab_capacity for f in schema if f.kind == KIND_CATEGORICAL]
        all_cols = [col_of[f.name] for f in schema]
        label_col = col_of[LABEL_COLUMN]

        ids_rows: list[list[int]] = []
        labels: list[int] = []
        raw_values: list[tuple[str, ...]] = []
        extra_text: list[Optional[str]] = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataParseError(
                    f"{path}: line {lineno}: expected {len(header)} cells, got {len(row)}")
            label_raw = row[label_col].strip()
            if label_raw not in ("0", "1"):
                raise DataParseError(
                    f"{path}: line {lineno}: label must be 0 or 1, got {label_raw!r}")
            labels.append(int(label_raw))
            ids_rows.append([
                stable_bucket(row[c].strip().lower(), cap)
                for c, cap in zip(cat_cols, cat_caps)
            ])
            raw_values.append(tuple(row[c] for c in all_cols))
            extra_text.append(row[col_of[EXTRA_TEXT_COLUMN]] if has_extra else None)

    m = len(labels)
    if m == 0:
        return _empty_dataset(schema)
    return Dataset(
        schema=schema,
        ids=np.arange(m, dtype=np.int64),
        features=np.asarray(ids_rows, dtype=np.int64),
        labels=np.asarray(labels, dtype=np.int64),
        raw_values=raw_values,
        extra_text=extra_text,
    )


def split(dataset: Dataset, ratios: Sequence[float], seed: int
          ) -> tuple[Dataset, Dataset, Dataset]:
    """Deterministic three-way split: seeded permutation, then contiguous cuts."""
    if len(ratios) != 3:
        raise ConfigError(f"expected 3 split ratios, got {len(ratios)}")
    r1, r2, r3 = (float(r) for r in ratios)
    if min(r1, r2, r3) < 0:
        raise ConfigError(f"split ratios must be nonnegative, got {ratios}")
    if abs((r1 + r2 + r3) - 1.0) > 1e-9:
        raise ConfigError(f"split ratios must sum to 1, got {ratios}")
    m = dataset.size
    perm = np.random.default_rng(seed).permutation(m)
    cut1 = int(np.floor(m * r1))
    cut2 = int(np.floor(m * (r1 + r2)))
    return (dataset.subset(perm[:cut1]),
            dataset.subset(perm[cut1:cut2]),
            dataset.subset(perm[cut2:]))


def batches(dataset: Dataset, batch_size: int,
            shuffle_seed: Optional[int] = None) -> Iterator[Batch]:
    """Chunk one epoch into batches; the final short batch is kept.

    With a seed the order is a seeded permutation, otherwise dataset
    order. Every position appears exactly once per epoch.
    """
    if batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
    m = dataset.size
    if shuffle_seed is None:
        order = np.arange(m, dtype=np.int64)
    else:
        order = np.random.default_rng(shuffle_seed).permutation(m)
    for start in range(0, m, batch_size):
        yield Batch(order[start:start + batch_size])
