"""Checkpoint file round trips."""

import numpy as np
import pytest

from safecast.errors import FormatError
from safecast.nn import load_checkpoint, save_checkpoint


def test_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    entries = {
        "encoder.weight": rng.normal(size=(3, 4)),
        "encoder.bias": rng.normal(size=(4,)),
        "scalar": np.array(3.25),
    }
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, entries, meta={"step": 7})
    loaded, meta = load_checkpoint(path)
    assert meta == {"step": 7}
    assert list(loaded) == list(entries)
    for name in entries:
        assert loaded[name].shape == entries[name].shape
        np.testing.assert_array_equal(loaded[name], entries[name])


def test_manifest_order_preserved(tmp_path):
    entries = {"b": np.ones(2), "a": np.zeros(3)}
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, entries)
    loaded, _ = load_checkpoint(path)
    assert list(loaded) == ["b", "a"]


def test_little_endian_layout(tmp_path):
    path = tmp_path / "le.ckpt"
    save_checkpoint(path, {"x": np.array([1.0])})
    blob = path.read_bytes().split(b"\n", 1)[1]
    assert blob == np.array([1.0], dtype="<f8").tobytes()


def test_truncated_file_rejected(tmp_path):
    path = tmp_path / "t.ckpt"
    save_checkpoint(path, {"x": np.ones(8)})
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(FormatError):
        load_checkpoint(path)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path / "nope.ckpt")


def test_garbage_header_rejected(tmp_path):
    path = tmp_path / "g.ckpt"
    path.write_bytes(b"\x00\x01\x02not json\n1234")
    with pytest.raises(FormatError):
        load_checkpoint(path)
