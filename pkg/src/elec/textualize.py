"""Render tabular samples as text for embedding export.

Each schema field becomes a "<Name> is <value>." segment (first letter
of the field name uppercased, value verbatim); segments are joined by
single spaces and any extra free text is appended last.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .data import Dataset, FieldSchema, Sample
from .errors import DataParseError

_WS = str.maketrans({"\t": " ", "\n": " ", "\r": " "})


@dataclass(frozen=True)
class TextualizedSample:
    id: int
    text: str
    extra: Optional[str] = None


def textualize_sample(sample: Sample, schema: Sequence[FieldSchema]) -> TextualizedSample:
    """Deterministically render one sample; field order follows the schema."""
    segments = []
    for fld, value in zip(schema, sample.raw_values):
        name = fld.name[:1].upper() + fld.name[1:]
        segments.append(f"{name} is {value}.")
    if sample.extra_text:
        segments.append(sample.extra_text)
    return TextualizedSample(id=sample.id, text=" ".join(segments),
                             extra=sample.extra_text)


def textualize_dataset(dataset: Dataset, out_path) -> int:
    """Write "<id>\\t<text>" lines in id order; returns the number written.

    Tabs and line breaks inside the rendered text are replaced by spaces
    so the line format stays parseable.
    """
    order = dataset.ids.argsort(kind="stable")
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        for i in order:
            rendered = textualize_sample(dataset.sample(int(i)), dataset.schema)
            fh.write(f"{rendered.id}\t{rendered.text.translate(_WS)}\n")
    return dataset.size


def read_textualized(path) -> list[tuple[int, str]]:
    """Parse a textualize output file back into (id, text) pairs."""
    out: list[tuple[int, str]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            sid, sep, text = line.partition("\t")
            if not sep:
                raise DataParseError(f"{path}: line {lineno}: missing tab separator")
            try:
                out.append((int(sid), text))
            except ValueError:
                raise DataParseError(
                    f"{path}: line {lineno}: bad sample id {sid!r}") from None
    return out
