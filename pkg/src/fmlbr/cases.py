"""Benchmark metric fields in closed form.

Case ids: ``surface`` (distance on a height-field surface), ``surface-rotated``
(the same metric pulled back by a rotation of angle theta about the origin),
``seismic`` (constant eigenvalues, oscillating eigenvectors), ``spiral2d`` and
``spiral3d`` (identity except in a thin band around a spiral where moving
tangentially is cheap), and ``constant`` (a fixed tensor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import MetricGrid
from .tensor import SpdTensor, packed_size

__all__ = ["CaseSpec", "CASES", "get_case", "case_metric", "case_tensors", "sample_metric",
           "spiral2d_parameter", "spiral3d_parameter"]


@dataclass(frozen=True)
class CaseSpec:
    name: str
    dim: int
    bounds: tuple
    dims: tuple
    source: tuple  # physical source point
    start: tuple | None = None  # default geodesic start point
    theta: float = 0.0
    params: dict = field(default_factory=dict, compare=False, hash=False)

    def with_theta(self, theta: float) -> "CaseSpec":
        return CaseSpec(self.name, self.dim, self.bounds, self.dims, self.source, self.start,
                        float(theta), self.params)

    def with_dims(self, dims) -> "CaseSpec":
        return CaseSpec(self.name, self.dim, self.bounds, tuple(int(n) for n in dims), self.source,
                        self.start, self.theta, self.params)


SQUARE = ((-0.5, 0.5), (-0.5, 0.5))

CASES = {
    "surface": CaseSpec("surface", 2, SQUARE, (292, 292), (0.0, 0.0), None, 0.0,
                        {"amplitude": 0.75, "freq": 3 * math.pi}),
    "surface-rotated": CaseSpec("surface-rotated", 2, SQUARE, (292, 292), (0.0, 0.0), None, math.pi / 6,
                                {"amplitude": 0.75, "freq": 3 * math.pi}),
    "seismic": CaseSpec("seismic", 2, SQUARE, (193, 193), (0.0, 0.0), None, 0.0,
                        {"slow": 0.2, "fast": 0.8, "freq": 4 * math.pi, "amp": math.pi / 2}),
    "spiral2d": CaseSpec("spiral2d", 2, ((-1.1, 1.1), (-1.1, 1.1)), (500, 500), (0.0, 0.0), (1.0, -1.0), 0.0,
                         {"omega": 6 * math.pi, "r0": 0.01, "delta0": 0.01}),
    "spiral3d": CaseSpec("spiral3d", 3, ((-1.1, 1.1), (-1.1, 1.1), (0.0, 3.0)), (200, 200, 272),
                         (0.0, 0.0, 0.0), (0.0, 0.0, 3.0), 0.0,
                         {"omega": 2.5 * math.pi, "r0": 0.02, "delta0": 0.02}),
}


def get_case(name: str, theta: float | None = None, tensor: SpdTensor | None = None, dims=None,
             bounds=None) -> CaseSpec:
    """Case by id; ``constant`` needs ``tensor`` (bounds default to the unit square/cube)."""
    if name == "constant":
        if tensor is None:
            raise ValueError("the constant case needs a tensor")
        d = tensor.dim
        b = tuple(bounds) if bounds is not None else ((-0.5, 0.5),) * d
        spec = CaseSpec("constant", d, b, tuple(dims) if dims else (65,) * d, (0.0,) * d, None, 0.0,
                        {"tensor": tensor})
        return spec
    if name not in CASES:
        raise ValueError(f"unknown case {name!r}; choose from {sorted(CASES) + ['constant']}")
    spec = CASES[name]
    if theta is not None:
        spec = spec.with_theta(theta)
    if dims is not None:
        spec = spec.with_dims(dims)
    return spec


# --------------------------------------------------------------------------
# vectorised evaluators: points (n, d) -> packed tensors (n, P)


def _pack2(a, b, c):
    return np.stack([a, b, c], axis=-1)


def _surface(p, prm):
    A, w = prm["amplitude"], prm["freq"]
    x, y = p[:, 0], p[:, 1]
    hx = A * w * np.cos(w * x) * np.sin(w * y)
    hy = A * w * np.sin(w * x) * np.cos(w * y)
    return _pack2(1.0 + hx * hx, hx * hy, 1.0 + hy * hy)


def _rotate_pullback(func, p, prm, theta):
    if theta == 0.0:
        return func(p, prm)
    c, s = math.cos(theta), math.sin(theta)
    R = np.array([[c, -s], [s, c]])
    t = func(p @ R.T, prm)
    m = np.stack([np.stack([t[:, 0], t[:, 1]], -1), np.stack([t[:, 1], t[:, 2]], -1)], -2)
    r = np.einsum("ji,njk,kl->nil", R, m, R)
    return _pack2(r[:, 0, 0], 0.5 * (r[:, 0, 1] + r[:, 1, 0]), r[:, 1, 1])


def _seismic(p, prm):
    x = p[:, 0]
    ex = np.ones_like(x)
    ey = prm["amp"] * np.cos(prm["freq"] * x)
    n2 = ex * ex + ey * ey
    lo, hi = prm["slow"], prm["fast"]
    k = (hi - lo) / n2
    return _pack2(hi - k * ex * ex, -k * ex * ey, hi - k * ey * ey)


def spiral2d_parameter(p, prm):
    """Band parameter t per point (NaN outside); inside iff rho in [t, t + r0]."""
    omega, r0 = prm["omega"], prm["r0"]
    x, y = p[:, 0], p[:, 1]
    rho = np.hypot(x, y)
    phi = np.mod(np.arctan2(y, x), 2 * math.pi)
    t_out = np.full(len(p), np.nan)
    kmax = int(math.ceil(omega / (2 * math.pi))) + 1
    for k in range(kmax + 1):
        t = (phi + 2 * math.pi * k) / omega
        ok = (t >= 0.0) & (t <= 1.0) & (rho >= t) & (rho <= t + r0) & np.isnan(t_out)
        t_out[ok] = t[ok]
    return t_out


def _band_tensor(tau, delta0):
    # I - (1 - delta0^2) tau tau^T with tau a unit vector
    d = tau.shape[1]
    c = 1.0 - delta0 * delta0
    out = []
    for i in range(d):
        for j in range(i, d):
            out.append((1.0 if i == j else 0.0) - c * tau[:, i] * tau[:, j])
    return np.stack(out, -1)


def _identity(n, d):
    eye = np.array([1.0 if i == j else 0.0 for i in range(d) for j in range(i, d)])
    return np.tile(eye, (n, 1))


def _spiral2d(p, prm):
    omega, delta0 = prm["omega"], prm["delta0"]
    t = spiral2d_parameter(p, prm)
    out = _identity(len(p), 2)
    inside = ~np.isnan(t)
    if inside.any():
        ti = t[inside]
        gx = np.cos(omega * ti) - omega * ti * np.sin(omega * ti)
        gy = np.sin(omega * ti) + omega * ti * np.cos(omega * ti)
        tau = np.stack([gx, gy], -1)
        tau /= np.linalg.norm(tau, axis=1, keepdims=True)
        out[inside] = _band_tensor(tau, delta0)
    return out


def spiral3d_parameter(p, prm):
    """Tube parameter t per point (NaN outside): (rho - 1)^2 + (h - t)^2 <= (r0/2)^2."""
    omega, r0 = prm["omega"], prm["r0"]
    x, y, h = p[:, 0], p[:, 1], p[:, 2]
    lam = np.hypot(x, y) - 1.0
    phi = np.mod(np.arctan2(y, x), 2 * math.pi)
    period = 2 * math.pi / omega
    # candidate t = (phi + 2 pi k) / omega closest to h
    k = np.round((h - phi / omega) / period)
    t = (phi + 2 * math.pi * k) / omega
    mu = h - t
    inside = (lam * lam + mu * mu <= (0.5 * r0) ** 2) & (t >= 0.0) & (t <= prm.get("height", 3.0))
    return np.where(inside, t, np.nan)


def _spiral3d(p, prm):
    omega, delta0 = prm["omega"], prm["delta0"]
    t = spiral3d_parameter(p, prm)
    out = _identity(len(p), 3)
    inside = ~np.isnan(t)
    if inside.any():
        ti = t[inside]
        tau = np.stack([-omega * np.sin(omega * ti), omega * np.cos(omega * ti), np.ones_like(ti)], -1)
        tau /= np.linalg.norm(tau, axis=1, keepdims=True)
        out[inside] = _band_tensor(tau, delta0)
    return out


def case_tensors(spec: CaseSpec, points) -> np.ndarray:
    """Packed tensors (n, P) at physical points (n, d)."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    if p.shape[1] != spec.dim:
        raise ValueError(f"{spec.name} is {spec.dim}D, got points of dimension {p.shape[1]}")
    for k, (a, b) in enumerate(spec.bounds):
        tol = 1e-9 * (b - a)
        if np.any(p[:, k] < a - tol) or np.any(p[:, k] > b + tol):
            raise ValueError(f"point outside the {spec.name} domain {spec.bounds}")
    prm = spec.params
    if spec.name == "constant":
        return np.tile(np.asarray(prm["tensor"].entries), (len(p), 1))
    if spec.name in ("surface", "surface-rotated"):
        return _rotate_pullback(_surface, p, prm, spec.theta)
    if spec.name == "seismic":
        return _seismic(p, prm)
    if spec.name == "spiral2d":
        return _spiral2d(p, prm)
    if spec.name == "spiral3d":
        return _spiral3d(p, prm)
    raise ValueError(f"unknown case {spec.name!r}")


def case_metric(spec: CaseSpec, z) -> SpdTensor:
    t = case_tensors(spec, [z])[0]
    return SpdTensor(spec.dim, tuple(t))


def sample_metric(spec: CaseSpec, dims=None) -> MetricGrid:
    dims = tuple(int(n) for n in (dims if dims is not None else spec.dims))
    if len(dims) != spec.dim:
        raise ValueError(f"{spec.name} needs {spec.dim} grid dimensions, got {dims}")
    if any(n < 2 for n in dims):
        raise ValueError("need at least 2 nodes per axis")
    axes = [np.linspace(a, b, n) for (a, b), n in zip(spec.bounds, dims)]
    P = packed_size(spec.dim)
    out = np.empty(dims + (P,))
    # slab by slab along the first axis keeps memory bounded
    rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), -1).reshape(-1, spec.dim - 1)
    for i, x0 in enumerate(axes[0]):
        pts = np.column_stack([np.full(len(rest), x0), rest])
        out[i] = case_tensors(spec, pts).reshape(dims[1:] + (P,))
    return MetricGrid(dims, spec.bounds, out)
