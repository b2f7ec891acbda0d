import numpy as np
import pytest

from elec.checkpoint import (load_checkpoint, load_into, save_checkpoint)
from elec.errors import DimensionError, StoreCorruptError, StoreFormatError
from elec.nn import Parameter

RNG = np.random.default_rng


def some_params(seed=0):
    rng = RNG(seed)
    return [Parameter("m.weight", rng.normal(size=(3, 4))),
            Parameter("m.bias", rng.normal(size=3)),
            Parameter("emb", rng.normal(size=(5, 2)))]


class TestRoundTrip:
    def test_values_survive_within_f32(self, tmp_path):
        params = some_params()
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, "vanilla", params, {"variant": "dcnv2", "seed": "7"})
        tag, meta, records = load_checkpoint(path)
        assert tag == "vanilla"
        assert meta == {"variant": "dcnv2", "seed": "7"}
        for p in params:
            expected = p.values.astype(np.float32).astype(np.float64)
            assert np.array_equal(records[p.name], expected)

    def test_load_into_assigns_by_name(self, tmp_path):
        params = some_params(1)
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, "gain", params)
        fresh = some_params(2)
        _, _, records = load_checkpoint(path)
        load_into(fresh, records)
        for a, b in zip(fresh, params):
            assert np.array_equal(a.values, b.values.astype(np.float32))

    def test_rewrite_is_byte_identical(self, tmp_path):
        params = some_params(3)
        a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        save_checkpoint(a, "adapter", params, {"k": "v"})
        save_checkpoint(b, "adapter", params, {"k": "v"})
        assert a.read_bytes() == b.read_bytes()


class TestFailureModes:
    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, "t", some_params())
        blob = bytearray(path.read_bytes())
        blob[:4] = b"XXXX"
        path.write_bytes(bytes(blob))
        with pytest.raises(StoreFormatError):
            load_checkpoint(path)

    def test_truncation(self, tmp_path):
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, "t", some_params())
        path.write_bytes(path.read_bytes()[:-7])
        with pytest.raises(StoreCorruptError):
            load_checkpoint(path)

    def test_trailing_garbage(self, tmp_path):
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, "t", some_params())
        path.write_bytes(path.read_bytes() + b"junk")
        with pytest.raises(StoreCorruptError):
            load_checkpoint(path)

    def test_missing_parameter(self, tmp_path):
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, "t", some_params()[:2])
        _, _, records = load_checkpoint(path)
        with pytest.raises(StoreCorruptError):
            load_into(some_params(), records)

    def test_shape_mismatch(self, tmp_path):
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, "t", [Parameter("m.weight", np.zeros((2, 2)))])
        _, _, records = load_checkpoint(path)
        with pytest.raises(DimensionError):
            load_into([Parameter("m.weight", np.zeros((3, 4)))], records)
