"""Grids of phase-space values and their CSV / PGM / JSON exports."""
from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classical import EmpiricalMeasure
from .errors import InvalidStateError


@dataclass(frozen=True, eq=False)
class HusimiGrid:
    """Rectangular grid of nonnegative values with free-form metadata.

    Rows index the first coordinate (``theta`` on the sphere, ``q`` on the
    torus), columns the second.
    """

    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2:
            raise InvalidStateError("grid values must be two-dimensional")
        if np.any(v < 0):
            raise InvalidStateError("grid values must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple:
        return self.values.shape

    def mass(self) -> np.ndarray:
        """Values scaled to unit total."""
        total = self.values.sum()
        return self.values / total if total > 0 else self.values

    def row_profile(self) -> np.ndarray:
        return self.mass().sum(axis=1)

    def col_profile(self) -> np.ndarray:
        return self.mass().sum(axis=0)


def config_hash(config) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _as_array(obj) -> np.ndarray:
    if isinstance(obj, HusimiGrid):
        return obj.values
    if isinstance(obj, EmpiricalMeasure):
        w = obj.normalized()
        return w.reshape(-1, 1) if w.ndim == 1 else w
    return np.atleast_2d(np.asarray(obj, dtype=float))


def write_csv(path, obj) -> Path:
    """One row per cell: ``row,col,value`` (``cell,weight`` for 1D measures)."""
    path = Path(path)
    arr = _as_array(obj)
    one_d = isinstance(obj, EmpiricalMeasure) and obj.weights.ndim == 1
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        if one_d:
            w.writerow(["cell", "weight"])
            for i, v in enumerate(arr[:, 0]):
                w.writerow([i, repr(float(v))])
        else:
            w.writerow(["row", "col", "value"])
            for (i, k), v in np.ndenumerate(arr):
                w.writerow([i, k, repr(float(v))])
    return path


def write_profile_csv(path, columns: dict) -> Path:
    """Equal-length named columns, one row per index."""
    path = Path(path)
    names = list(columns)
    data = [np.asarray(columns[n]) for n in names]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["index"] + names)
        for i in range(len(data[0])):
            w.writerow([i] + [repr(float(d[i])) for d in data])
    return path


def write_pgm(path, obj, *, bits: int = 8, binary: bool = False, comment: str = "") -> dict:
    """Write a max-normalized greyscale PGM (P2 ASCII or P5 binary).

    Returns the normalization record that belongs in the JSON sidecar.
    """
    if bits not in (8, 16):
        raise ValueError("PGM depth must be 8 or 16 bits")
    arr = _as_array(obj)
    maxval = 255 if bits == 8 else 65535
    peak = float(arr.max()) if arr.size else 0.0
    scaled = np.zeros(arr.shape, dtype=np.int64) if peak <= 0 else np.rint(arr / peak * maxval).astype(np.int64)
    h, w = scaled.shape
    header = f"{'P5' if binary else 'P2'}\n"
    if comment:
        header += "".join(f"# {line}\n" for line in comment.splitlines())
    header += f"{w} {h}\n{maxval}\n"
    path = Path(path)
    if binary:
        dtype = ">u1" if bits == 8 else ">u2"
        path.write_bytes(header.encode("ascii") + scaled.astype(dtype).tobytes())
    else:
        lines = [" ".join(map(str, row)) for row in scaled]
        path.write_text(header + "\n".join(lines) + "\n", encoding="ascii")
    return {"file": path.name, "maxval": maxval, "peak_value": peak, "width": w, "height": h,
            "encoding": "P5" if binary else "P2"}


def read_pgm(path) -> np.ndarray:
    """Read back a PGM written by :func:`write_pgm` (comments allowed)."""
    raw = Path(path).read_bytes()
    magic = raw[:2].decode()
    tokens, pos = [], 2
    while len(tokens) < 3:
        while raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        end = pos
        while not raw[end:end + 1].isspace():
            end += 1
        tokens.append(int(raw[pos:end]))
        pos = end
    w, h, maxval = tokens
    pos += 1
    if magic == "P5":
        dtype = ">u1" if maxval < 256 else ">u2"
        return np.frombuffer(raw[pos:], dtype=dtype, count=w * h).reshape(h, w).astype(np.int64)
    return np.array(raw[pos:].split(), dtype=np.int64).reshape(h, w)


def write_json(path, doc) -> Path:
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")
