"""Binary parameter container round trips and corruption handling."""

import json

import numpy as np
import pytest

from hybridref.errors import DataError
from hybridref.tensor import Tensor, load_params, save_params
from hybridref.tensor.checkpoint import MAGIC


def test_round_trip_preserves_values_and_order(tmp_path, rng):
    params = {
        "token_embeddings": rng.normal(size=(11, 4)),
        "layer0.attn.wq": rng.normal(size=(4, 4)),
        "scalarish": np.array(3.5),
        "bias": rng.normal(size=7),
    }
    path = tmp_path / "model.ckpt"
    save_params(path, params)
    loaded = load_params(path)
    assert list(loaded) == list(params)
    for name, arr in params.items():
        assert loaded[name].dtype == np.float64
        np.testing.assert_array_equal(loaded[name], arr)
        assert loaded[name].flags.writeable


def test_round_trip_accepts_tensors(tmp_path):
    path = tmp_path / "t.ckpt"
    save_params(path, {"w": Tensor([[1.0, 2.0]])})
    np.testing.assert_array_equal(load_params(path)["w"], [[1.0, 2.0]])


def test_bad_magic(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"NOTRIGHT" + b"\x00" * 32)
    with pytest.raises(DataError, match="bad magic"):
        load_params(path)


def test_truncated_payload(tmp_path, rng):
    path = tmp_path / "model.ckpt"
    save_params(path, {"w": rng.normal(size=(8, 8))})
    raw = path.read_bytes()
    path.write_bytes(raw[:-16])
    with pytest.raises(DataError, match="overruns"):
        load_params(path)


def test_corrupt_header(tmp_path):
    header = b'{"not json'
    path = tmp_path / "model.ckpt"
    path.write_bytes(MAGIC + len(header).to_bytes(8, "little") + header)
    with pytest.raises(DataError, match="corrupt checkpoint header"):
        load_params(path)


def test_header_is_json_with_documented_fields(tmp_path, rng):
    path = tmp_path / "model.ckpt"
    save_params(path, {"w": rng.normal(size=(2, 3))})
    raw = path.read_bytes()
    assert raw[:8] == MAGIC
    hlen = int.from_bytes(raw[8:16], "little")
    header = json.loads(raw[16:16 + hlen])
    assert header["format_version"] == 1
    (entry,) = header["entries"]
    assert set(entry) == {"name", "shape", "offset", "nbytes"}
    assert entry["shape"] == [2, 3] and entry["nbytes"] == 48
