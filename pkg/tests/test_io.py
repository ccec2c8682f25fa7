import json
import struct

import numpy as np
import pytest

import oracle
from symtensor import io
from symtensor.errors import ConfigError
from symtensor.sectors import get_sector
from symtensor.tensor import random_tensor

LABELS = {
    "Trivial": [0], "Z2": [0, 1], "Z4": [0, 1, 3], "U1": [-2, 0, 1], "SU2": [0, 1, 2],
    "fZ2": [0, 1], "Fib": [0, 1], "Ising": [0, 1, 2],
    "fZ2 x SU2 x SU2": [(0, 0, 1), (1, 1, 0), (0, 1, 1)],
}


def _random(name, seed):
    rng = np.random.default_rng(seed)
    s = get_sector(name)
    spaces = [oracle.random_space(rng, s, LABELS[name], max_deg=2) for _ in range(3)]
    return random_tensor(spaces[:2], spaces[2:], rng=rng)


def _same_bits(A, B):
    assert A.space == B.space
    assert list(A.blocks) == list(B.blocks)
    for c in A.blocks:
        a, b = A.blocks[c], B.blocks[c]
        assert a.shape == b.shape
        assert np.array_equal(a.view(np.float64), np.ascontiguousarray(b).view(np.float64))


@pytest.mark.parametrize("name", list(LABELS))
def test_binary_round_trip_is_bit_exact(name):
    A = _random(name, 3)
    B = io.from_bytes(io.to_bytes(A))
    _same_bits(A, B)
    assert io.to_bytes(B) == io.to_bytes(A)


@pytest.mark.parametrize("name", list(LABELS))
def test_json_round_trip(name):
    A = _random(name, 4)
    B = io.from_json(io.to_json(A))
    assert A.space == B.space
    for c in A.blocks:
        np.testing.assert_allclose(B.blocks[c], A.blocks[c], rtol=0, atol=1e-15)


def test_json_fields():
    A = _random("fZ2 x SU2 x SU2", 0)
    doc = json.loads(io.to_json(A))
    assert doc["format_version"] == io.FORMAT_VERSION
    assert doc["sector_kind"] == "fZ2 x SU2 x SU2"
    for rec in doc["blocks"]:
        assert rec["charge"].startswith("(")
        assert len(rec["data"]) == 2 * rec["rows"] * rec["cols"]


def test_binary_layout():
    A = _random("U1", 1)
    buf = io.to_bytes(A)
    assert buf[:4] == b"STNS"
    version, hlen = struct.unpack("<II", buf[4:12])
    assert version == io.FORMAT_VERSION
    head = json.loads(buf[12:12 + hlen])
    n = sum(2 * r["rows"] * r["cols"] for r in head["blocks"])
    assert len(buf) == 12 + hlen + 8 * n


def test_corrupt_inputs():
    A = _random("SU2", 2)
    buf = io.to_bytes(A)
    with pytest.raises(ConfigError):
        io.from_bytes(b"XXXX" + buf[4:])
    with pytest.raises(ConfigError):
        io.from_bytes(buf[:4] + struct.pack("<I", 99) + buf[8:])
    with pytest.raises(ConfigError):
        io.from_bytes(buf + b"\0" * 8)
    doc = json.loads(io.to_json(A))
    doc["format_version"] = 2
    with pytest.raises(ConfigError):
        io.from_json(json.dumps(doc))
    doc["format_version"] = io.FORMAT_VERSION
    doc["blocks"][0]["data"] = doc["blocks"][0]["data"][:-2]
    with pytest.raises(ConfigError):
        io.from_json(json.dumps(doc))


def test_save_and_load(tmp_path):
    A = _random("Ising", 5)
    io.save(A, tmp_path / "a.json")
    io.save(A, tmp_path / "a.stns")
    assert (tmp_path / "a.stns").read_bytes()[:4] == b"STNS"
    _same_bits(A, io.load(tmp_path / "a.stns"))
    B = io.load(tmp_path / "a.json")
    for c in A.blocks:
        np.testing.assert_allclose(B.blocks[c], A.blocks[c], atol=1e-15)
