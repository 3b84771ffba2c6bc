"""Named float64 arrays in one flat binary file plus a text manifest."""

from __future__ import annotations

from pathlib import Path

import numpy as np

BIN = "params.bin"
MANIFEST = "manifest.tsv"


def save_checkpoint(arrays: dict, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    offset = 0
    rows = ["name\tshape\toffset"]
    with open(directory / BIN, "wb") as f:
        for name, arr in arrays.items():
            data = np.ascontiguousarray(np.asarray(arr, dtype="<f8"))
            f.write(data.tobytes())
            shape = "x".join(str(s) for s in data.shape) or "scalar"
            rows.append(f"{name}\t{shape}\t{offset}")
            offset += data.nbytes
    (directory / MANIFEST).write_text("\n".join(rows) + "\n", encoding="utf-8")
    return directory


def load_checkpoint(directory) -> dict:
    directory = Path(directory)
    blob = (directory / BIN).read_bytes()
    out = {}
    lines = (directory / MANIFEST).read_text(encoding="utf-8").splitlines()[1:]
    for line in lines:
        if not line.strip():
            continue
        name, shape, offset = line.split("\t")
        dims = () if shape == "scalar" else tuple(int(s) for s in shape.split("x"))
        count = int(np.prod(dims)) if dims else 1
        start = int(offset)
        out[name] = np.frombuffer(blob, dtype="<f8", count=count, offset=start).reshape(dims).astype(np.float64)
    return out
