"""Reduced bases of the integer lattice with respect to an SPD tensor.

``reduce_basis`` returns a basis whose k-th vector has minimal M-norm among
lattice points outside the sublattice spanned by the previous ones. Gauss's
algorithm handles 2D; 3D uses the greedy scheme: Gauss-reduce the two
shortest vectors, then replace the third by its residual against the closest
vector of their sublattice, until the ordering stabilises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tensor import SpdTensor, anisotropy_ratio

__all__ = [
    "LatticeBasis",
    "ReductionError",
    "reduce_basis",
    "oracle_reduced_norms",
    "round_half_to_zero",
    "iteration_limit",
]

ISOTROPIC_EPS = 1e-12


class ReductionError(RuntimeError):
    """The reduction loop did not terminate within its iteration budget."""


@dataclass(frozen=True)
class LatticeBasis:
    dim: int
    vectors: tuple
    iterations: int = field(default=0, compare=False)

    def norms(self, M: SpdTensor) -> tuple:
        return tuple(math.sqrt(M.quad(u)) for u in self.vectors)

    def determinant(self) -> int:
        return int(round(np.linalg.det(np.array(self.vectors, dtype=float))))


def round_half_to_zero(x: float) -> int:
    """Nearest integer, half-integers rounded toward zero."""
    return int(math.copysign(math.ceil(abs(x) - 0.5), x))


def iteration_limit(kappa: float) -> int:
    return int(64 + 8 * math.log(kappa))


def _dot(M, u, v) -> float:
    return M.dot(u, v)


def _sub(u, v, r: int = 1) -> tuple:
    return tuple(a - r * b for a, b in zip(u, v))


def _canonical_sign(u) -> tuple:
    for a in u:
        if a != 0:
            return tuple(u) if a > 0 else tuple(-b for b in u)
    return tuple(u)


def _tie_key(u) -> tuple:
    return tuple(abs(a) for a in u) + tuple(a < 0 for a in u)


def _gauss(M, u, v, budget: int):
    """Gauss's loop on the pair (u, v); returns (u, v, iterations) with ||u|| <= ||v||."""
    nu = _dot(M, u, u)
    nv = _dot(M, v, v)
    it = 0
    while True:
        it += 1
        if it > budget:
            raise ReductionError("Gauss reduction exceeded its iteration limit")
        r = round_half_to_zero(_dot(M, u, v) / nv)
        u, v = v, _sub(u, v, r)
        nu, nv = nv, _dot(M, v, v)
        if not nu > nv:
            return u, v, it


def _finalize(M, vectors, iterations) -> LatticeBasis:
    vectors = [_canonical_sign(u) for u in vectors]
    keyed = sorted(vectors, key=lambda u: (M.quad(u), _tie_key(u)))
    return LatticeBasis(M.dim, tuple(keyed), iterations)


def reduce_basis(M: SpdTensor) -> LatticeBasis:
    """M-reduced basis of Z^d, d in {1, 2, 3}, sorted by increasing M-norm."""
    d = M.dim
    if d == 1:
        return LatticeBasis(1, ((1,),), 0)
    kappa = anisotropy_ratio(M)
    canon = [tuple(int(i == j) for j in range(d)) for i in range(d)]
    if kappa < 1.0 + ISOTROPIC_EPS:
        return _finalize(M, canon, 0)
    budget = iteration_limit(kappa)
    if d == 2:
        u, v, it = _gauss(M, canon[0], canon[1], budget)
        return _finalize(M, [u, v], it)
    return _finalize(M, *_greedy3(M, canon, budget))


def _greedy3(M, basis, budget):
    b = list(basis)
    total = 0
    for _ in range(budget):
        total += 1
        b.sort(key=lambda u: _dot(M, u, u))
        b0, b1, gi = _gauss(M, b[0], b[1], budget)
        total += gi
        b2 = _closest_residual(M, b0, b1, b[2])
        if not _dot(M, b2, b2) < _dot(M, b1, b1):
            return [b0, b1, b2], total
        b = [b0, b1, b2]
    raise ReductionError("greedy 3D reduction exceeded its iteration limit")


def _closest_residual(M, b0, b1, t):
    """t - c for c the closest vector to t in b0 Z + b1 Z (Gauss-reduced pair)."""
    g00 = _dot(M, b0, b0)
    g01 = _dot(M, b0, b1)
    g11 = _dot(M, b1, b1)
    r0 = _dot(M, b0, t)
    r1 = _dot(M, b1, t)
    det = g00 * g11 - g01 * g01
    x0 = (g11 * r0 - g01 * r1) / det
    x1 = (g00 * r1 - g01 * r0) / det
    c0 = round_half_to_zero(x0)
    c1 = round_half_to_zero(x1)
    best = None
    best_n = math.inf
    for i in (0, -1, 1):
        for j in (0, -1, 1):
            a, b = c0 + i, c1 + j
            cand = tuple(t[k] - a * b0[k] - b * b1[k] for k in range(3))
            n = _dot(M, cand, cand)
            if n < best_n:
                best, best_n = cand, n
    return best


# --------------------------------------------------------------------------
# exhaustive oracle


def _in_sublattice(z: np.ndarray, chosen: list) -> bool:
    if not chosen:
        return not np.any(z)
    A = np.array(chosen, dtype=float).T
    coef, *_ = np.linalg.lstsq(A, z.astype(float), rcond=None)
    ci = np.rint(coef)
    return bool(np.all(np.abs(coef - ci) < 1e-9) and np.array_equal(A @ ci, z.astype(float)))


def _ellipsoid_points(M: SpdTensor, radius2: float, box: int) -> np.ndarray:
    """All integer z with ||z||_inf <= box and z^T M z <= radius2 (last axis solved exactly)."""
    d = M.dim
    m = M.matrix()
    rng = np.arange(-box, box + 1)
    if d == 1:
        heads = np.zeros((1, 0))
    else:
        heads = np.stack(np.meshgrid(*([rng] * (d - 1)), indexing="ij"), -1).reshape(-1, d - 1)
    # z^T M z = a t^2 + 2 b t + c in the last coordinate t
    a = m[-1, -1]
    b = heads @ m[:-1, -1]
    c = np.einsum("ni,ij,nj->n", heads, m[:-1, :-1], heads)
    disc = b * b - a * (c - radius2)
    keep = disc >= 0
    heads, b, disc = heads[keep], b[keep], np.sqrt(disc[keep])
    lo = np.maximum(np.ceil((-b - disc) / a - 1e-9), -box).astype(int)
    hi = np.minimum(np.floor((-b + disc) / a + 1e-9), box).astype(int)
    counts = np.maximum(hi - lo + 1, 0)
    rows = np.repeat(np.arange(len(heads)), counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    last = np.repeat(lo, counts) + offs
    return np.column_stack([heads[rows], last]).astype(np.int64)


def oracle_reduced_norms(M: SpdTensor, kappa_max: float = 1e3) -> list:
    """Successive minima norms by exhaustive search in the box ||z||_inf <= ceil(kappa)."""
    d = M.dim
    kappa = anisotropy_ratio(M)
    if kappa > kappa_max:
        raise ValueError(f"kappa={kappa:.3g} too large for exhaustive search (limit {kappa_max:g})")
    box = int(math.ceil(kappa))
    # every successive minimum is at most max_j ||e_j||_M
    radius2 = max(M[i, i] for i in range(d)) * (1 + 1e-12)
    pts = _ellipsoid_points(M, radius2, box)
    m = M.matrix()
    q = np.einsum("ni,ij,nj->n", pts, m, pts)
    order = np.argsort(q, kind="stable")
    chosen: list = []
    norms: list = []
    for k in order:
        if q[k] <= 0.0:
            continue
        z = pts[k]
        if _in_sublattice(z, chosen):
            continue
        chosen.append(z)
        norms.append(math.sqrt(q[k]))
        if len(chosen) == d:
            break
    return norms
