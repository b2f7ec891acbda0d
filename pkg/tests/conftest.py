import numpy as np
import pytest

from elec.data import Dataset, FieldSchema, validate_schema


@pytest.fixture
def toy_schema():
    return validate_schema([
        FieldSchema("gender", vocab_capacity=8),
        FieldSchema("occupation", vocab_capacity=64),
    ])


def make_dataset(n, n_fields=2, vocab=8, seed=0, with_extra=False):
    """Small in-memory dataset with direct (unhashed) feature ids."""
    rng = np.random.default_rng(seed)
    feats = rng.integers(0, vocab, size=(n, n_fields))
    schema = validate_schema(
        [FieldSchema(f"f{i}", vocab_capacity=vocab) for i in range(n_fields)])
    return Dataset(
        schema=schema,
        ids=np.arange(n, dtype=np.int64),
        features=feats.astype(np.int64),
        labels=rng.integers(0, 2, size=n).astype(np.int64),
        raw_values=[tuple(f"v{v}" for v in row) for row in feats],
        extra_text=["note" if with_extra else None] * n,
    )
