"""Serialization of tensor maps.

Both containers carry ``format_version``, ``sector_kind``, the codomain and
domain spaces in the space grammar, and one record per block with the coupled
charge, its shape and the column-major data as interleaved real/imaginary
float64 values.  The text variant is JSON; the binary variant is

``b"STNS"`` | u32 version | u32 header length | JSON header | float64 data

with all integers and floats little-endian.  The header lists blocks without
their data, which follows in the same order.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .sectors import get_sector
from .spaces import HomSpace, ProductSpace, parse_space
from .tensor import TensorMap

FORMAT_VERSION = 1
MAGIC = b"STNS"


def _header(A: TensorMap) -> dict:
    s = A.sector
    return {
        "format_version": FORMAT_VERSION,
        "sector_kind": s.name,
        "codomain": [str(V) for V in A.codomain],
        "domain": [str(V) for V in A.domain],
        "blocks": [{"charge": s.label_str(c), "rows": b.shape[0], "cols": b.shape[1]}
                   for c, b in A.blocks.items()],
    }


def _interleave(b: np.ndarray) -> np.ndarray:
    flat = np.asarray(b, dtype=complex).ravel(order="F")
    out = np.empty(2 * flat.size, dtype="<f8")
    out[0::2] = flat.real
    out[1::2] = flat.imag
    return out


def _space_from(doc: dict) -> HomSpace:
    if doc.get("format_version") != FORMAT_VERSION:
        raise ConfigError(f"unsupported format version {doc.get('format_version')!r}")
    sector = get_sector(doc["sector_kind"])
    cod = ProductSpace(tuple(parse_space(t) for t in doc["codomain"]))
    dom = ProductSpace(tuple(parse_space(t) for t in doc["domain"]))
    return HomSpace.of(cod, dom, sector)


def _blocks_from(space: HomSpace, records, datas) -> TensorMap:
    s = space.sector
    blocks = {}
    for rec, data in zip(records, datas):
        c = s.parse_label(rec["charge"])
        m, n = int(rec["rows"]), int(rec["cols"])
        data = np.asarray(data, dtype="<f8")
        if data.size != 2 * m * n:
            raise ConfigError(f"block {rec['charge']} has {data.size} values, expected {2 * m * n}")
        z = data[0::2] + 1j * data[1::2]
        blocks[c] = z.reshape((m, n), order="F")
    return TensorMap(space, blocks)


def to_json(A: TensorMap) -> str:
    doc = _header(A)
    for rec, b in zip(doc["blocks"], A.blocks.values()):
        rec["data"] = _interleave(b).tolist()
    return json.dumps(doc)


def from_json(text: str) -> TensorMap:
    doc = json.loads(text)
    space = _space_from(doc)
    return _blocks_from(space, doc["blocks"], [r["data"] for r in doc["blocks"]])


def to_bytes(A: TensorMap) -> bytes:
    head = json.dumps(_header(A)).encode()
    parts = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(head)), head]
    parts += [_interleave(b).tobytes() for b in A.blocks.values()]
    return b"".join(parts)


def from_bytes(buf: bytes) -> TensorMap:
    if buf[:4] != MAGIC:
        raise ConfigError("missing STNS magic bytes")
    version, hlen = struct.unpack("<II", buf[4:12])
    if version != FORMAT_VERSION:
        raise ConfigError(f"unsupported format version {version}")
    doc = json.loads(buf[12:12 + hlen].decode())
    space = _space_from(doc)
    pos = 12 + hlen
    datas = []
    for rec in doc["blocks"]:
        n = 2 * int(rec["rows"]) * int(rec["cols"])
        datas.append(np.frombuffer(buf, dtype="<f8", count=n, offset=pos))
        pos += 8 * n
    if pos != len(buf):
        raise ConfigError("trailing or missing block data")
    return _blocks_from(space, doc["blocks"], datas)


def save(A: TensorMap, path, fmt: str | None = None) -> None:
    path = Path(path)
    fmt = fmt or ("json" if path.suffix == ".json" else "binary")
    if fmt == "json":
        path.write_text(to_json(A))
    else:
        path.write_bytes(to_bytes(A))


def load(path) -> TensorMap:
    raw = Path(path).read_bytes()
    if raw[:4] == MAGIC:
        return from_bytes(raw)
    return from_json(raw.decode())
