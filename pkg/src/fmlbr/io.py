"""Field files, path CSVs and level-set images."""

from __future__ import annotations

import csv
import math

import numpy as np

__all__ = ["write_field", "read_field", "write_path_csv", "render_levels", "write_pgm", "FieldFile"]

MAGIC = b"EIKFIELD"


class FieldFile:
    def __init__(self, values: np.ndarray, bounds):
        self.values = values
        self.bounds = tuple(tuple(b) for b in bounds)

    @property
    def dims(self) -> tuple:
        return self.values.shape


def write_field(path, values, bounds) -> None:
    """``EIKFIELD 1 <d> <n1> .. <nd> <min1> <max1> ..`` then little-endian float64, C order."""
    v = np.asarray(values, dtype=np.float64)
    if len(bounds) != v.ndim:
        raise ValueError("one (min, max) pair per axis")
    parts = ["EIKFIELD", "1", str(v.ndim)] + [str(n) for n in v.shape]
    parts += [repr(float(x)) for ab in bounds for x in ab]
    with open(path, "wb") as f:
        f.write((" ".join(parts) + "\n").encode("ascii"))
        f.write(np.ascontiguousarray(v).astype("<f8").tobytes())


def read_field(path) -> FieldFile:
    with open(path, "rb") as f:
        header = f.readline()
        data = f.read()
    tok = header.decode("ascii").split()
    if not tok or tok[0].encode() != MAGIC:
        raise ValueError(f"{path}: not an EIKFIELD file")
    if tok[1] != "1":
        raise ValueError(f"{path}: unsupported version {tok[1]}")
    d = int(tok[2])
    dims = tuple(int(t) for t in tok[3:3 + d])
    b = [float(t) for t in tok[3 + d:3 + 3 * d]]
    if len(b) != 2 * d:
        raise ValueError(f"{path}: truncated header")
    n = int(np.prod(dims))
    if len(data) != 8 * n:
        raise ValueError(f"{path}: expected {8 * n} data bytes, found {len(data)}")
    values = np.frombuffer(data, dtype="<f8").astype(np.float64).reshape(dims)
    return FieldFile(values, [(b[2 * k], b[2 * k + 1]) for k in range(d)])


def write_path_csv(path, points, values=None) -> None:
    """Rows ``x,y[,z]`` in physical coordinates, plus a ``value`` column if given."""
    pts = np.asarray(points, dtype=float)
    names = ["x", "y", "z"][: pts.shape[1]]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(names + (["value"] if values is not None else []))
        for i, p in enumerate(pts):
            row = [repr(float(c)) for c in p]
            if values is not None:
                row.append(repr(float(values[i])))
            w.writerow(row)


def render_levels(values, band: float) -> np.ndarray:
    """uint8 image: 255 on thin bands near multiples of ``band``, 0 elsewhere, 128 if unreached."""
    if not band > 0:
        raise ValueError("band must be positive")
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise ValueError("level images are 2D")
    img = np.zeros(v.shape, dtype=np.uint8)
    fin = np.isfinite(v)
    frac = np.mod(v[fin] / band, 1.0)
    img[fin] = np.where(frac < 0.1, 255, 0)
    img[~fin] = 128
    return img


def write_pgm(path, values, band: float | None = None) -> None:
    """Binary P5 image; rows run along the second axis, first axis left to right, y up."""
    v = np.asarray(values, dtype=float)
    if band is None:
        fin = v[np.isfinite(v)]
        top = float(fin.max()) if fin.size else 1.0
        band = top / 20 if top > 0 and math.isfinite(top) else 1.0
    img = render_levels(v, band)
    rows = np.ascontiguousarray(img.T[::-1])
    with open(path, "wb") as f:
        f.write(f"P5\n{rows.shape[1]} {rows.shape[0]}\n255\n".encode("ascii"))
        f.write(rows.tobytes())
