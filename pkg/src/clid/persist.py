"""Versioned binary container for fitted models.

Layout: ``b"CLID"``, format version (u16 LE), header length (u32 LE), UTF-8
JSON header describing the object tree, then an ``.npz`` archive holding
every array the header references.  Only dataclasses defined inside the
``clid`` package can be reconstructed.
"""
from __future__ import annotations

import dataclasses
import importlib
import io
import json
import struct
from pathlib import Path

import numpy as np

from clid.errors import DataError

MAGIC = b"CLID"
FORMAT_VERSION = 1


def _encode(obj, arrays: dict):
    if isinstance(obj, np.ndarray):
        key = f"a{len(arrays)}"
        arrays[key] = obj
        return {"__array__": key}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        cls = type(obj)
        fields = {f.name: _encode(getattr(obj, f.name), arrays) for f in dataclasses.fields(obj)}
        return {"__type__": f"{cls.__module__}:{cls.__qualname__}", "fields": fields}
    if isinstance(obj, tuple):
        return {"__tuple__": [_encode(v, arrays) for v in obj]}
    if isinstance(obj, list):
        return [_encode(v, arrays) for v in obj]
    if isinstance(obj, dict):
        if not all(isinstance(k, str) for k in obj):
            raise TypeError("only string-keyed dicts can be persisted")
        return {"__dict__": {k: _encode(v, arrays) for k, v in obj.items()}}
    if isinstance(obj, np.generic):
        return obj.item()
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    raise TypeError(f"cannot persist {type(obj).__name__}")


def _resolve(name: str):
    module, _, qual = name.partition(":")
    if module != "clid" and not module.startswith("clid."):
        raise DataError(f"refusing to load foreign type {name!r}")
    obj = importlib.import_module(module)
    for part in qual.split("."):
        obj = getattr(obj, part)
    return obj


def _decode(node, arrays):
    if isinstance(node, list):
        return [_decode(v, arrays) for v in node]
    if not isinstance(node, dict):
        return node
    if "__array__" in node:
        return arrays[node["__array__"]]
    if "__tuple__" in node:
        return tuple(_decode(v, arrays) for v in node["__tuple__"])
    if "__dict__" in node:
        return {k: _decode(v, arrays) for k, v in node["__dict__"].items()}
    if "__type__" in node:
        cls = _resolve(node["__type__"])
        return cls(**{k: _decode(v, arrays) for k, v in node["fields"].items()})
    raise DataError("corrupt model header")


def dumps(obj) -> bytes:
    arrays: dict[str, np.ndarray] = {}
    header = json.dumps(_encode(obj, arrays), sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    return MAGIC + struct.pack("<HI", FORMAT_VERSION, len(header)) + header + buf.getvalue()


def loads(data: bytes):
    if data[:4] != MAGIC:
        raise DataError("not a clid model file (bad magic)")
    version, hlen = struct.unpack("<HI", data[4:10])
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported model format version {version}")
    header = json.loads(data[10 : 10 + hlen].decode("utf-8"))
    with np.load(io.BytesIO(data[10 + hlen :]), allow_pickle=False) as npz:
        arrays = {k: npz[k] for k in npz.files}
    return _decode(header, arrays)


def save(obj, path: str | Path) -> None:
    Path(path).write_bytes(dumps(obj))


def load(path: str | Path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"model file not found: {path}")
    return loads(path.read_bytes())
