"""Binary and CSV serialization of grid fields.

Binary layout: three little-endian 64-bit header values ``N`` (int),
``n`` (int), ``L`` (float), followed by ``n**N`` row-major float64 samples.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import ShapeMismatch
from .resolvent import GridField, TorusGrid

HEADER = struct.Struct("<qqd")


def field_to_bytes(f: GridField) -> bytes:
    g = f.grid
    data = np.ascontiguousarray(f.samples, dtype="<f8")
    return HEADER.pack(g.N, g.n, g.L) + data.tobytes(order="C")


def field_from_bytes(buf: bytes) -> GridField:
    if len(buf) < HEADER.size:
        raise ShapeMismatch("truncated field header")
    N, n, L = HEADER.unpack_from(buf)
    count = n**N
    body = buf[HEADER.size :]
    if len(body) != 8 * count:
        raise ShapeMismatch(f"expected {count} samples, got {len(body) // 8}")
    grid = TorusGrid(L=L, n=n, N=N)
    samples = np.frombuffer(body, dtype="<f8").reshape(grid.shape).astype(float)
    return GridField(samples, grid)


def write_field(path, f: GridField) -> None:
    Path(path).write_bytes(field_to_bytes(f))


def read_field(path) -> GridField:
    return field_from_bytes(Path(path).read_bytes())


def write_field_csv(path, f: GridField) -> None:
    g = f.grid
    axes = [f"x{i + 1}" for i in range(g.N)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(axes + ["value"])
        x = g.x1d
        for idx in np.ndindex(*g.shape):
            w.writerow([repr(float(x[i])) for i in idx] + [repr(float(f.samples[idx]))])


def read_field_csv(path, L: float) -> GridField:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    N = len(header) - 1
    n = round(len(body) ** (1.0 / N))
    if n**N != len(body):
        raise ShapeMismatch(f"{len(body)} rows is not a cubic grid in N={N}")
    grid = TorusGrid(L=L, n=n, N=N)
    samples = np.array([float(r[-1]) for r in body]).reshape(grid.shape)
    return GridField(samples, grid)
