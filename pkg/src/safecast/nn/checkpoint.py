"""Single-file weight checkpoints.

Layout: one UTF-8 JSON header line with a manifest of (name, shape) entries
plus free-form metadata, a newline, then the raw little-endian float64
values of every entry concatenated in manifest order (row-major).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import FormatError

FORMAT_TAG = "safecast-checkpoint-v1"


def save_checkpoint(path, entries: dict[str, np.ndarray], meta: dict | None = None) -> None:
    header = {
        "format": FORMAT_TAG,
        "meta": meta or {},
        "entries": [{"name": k, "shape": list(v.shape)} for k, v in entries.items()],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\n")
        for value in entries.values():
            fh.write(np.ascontiguousarray(value, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"checkpoint not found: {path}")
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FormatError(f"unreadable checkpoint header in {path}: {exc}") from exc
        if header.get("format") != FORMAT_TAG:
            raise FormatError(f"unrecognized checkpoint format in {path}")
        blob = fh.read()
    entries: dict[str, np.ndarray] = {}
    offset = 0
    for item in header["entries"]:
        shape = tuple(item["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(blob):
            raise FormatError(f"checkpoint {path} truncated at entry {item['name']!r}")
        entries[item["name"]] = (
            np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
            .astype(np.float64)
            .reshape(shape)
        )
        offset += nbytes
    if offset != len(blob):
        raise FormatError(f"checkpoint {path} has {len(blob) - offset} trailing bytes")
    return entries, header.get("meta", {})
