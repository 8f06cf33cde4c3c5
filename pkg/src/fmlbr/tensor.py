"""Small symmetric positive definite tensors (dimension 1 to 3).

Tensors are stored packed, upper triangle row by row: ``(m11, m12, m22)`` in
2D and ``(m11, m12, m13, m22, m23, m33)`` in 3D. Every routine here uses
closed forms, so results are deterministic and independent of LAPACK.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "NotPositiveDefinite",
    "SpdTensor",
    "packed_size",
    "packed_index",
    "norm",
    "anisotropy_ratio",
    "multiplicative_distance",
    "rescale_by_spacing",
    "eigvalsh",
]

SPD_RTOL = 1e-12


class NotPositiveDefinite(ValueError):
    """Raised when a matrix fails the leading-minor positivity test."""


def packed_size(dim: int) -> int:
    return dim * (dim + 1) // 2


def packed_index(i: int, j: int, dim: int) -> int:
    """Position of entry (i, j) in the packed upper-triangular layout."""
    if i > j:
        i, j = j, i
    return i * dim - i * (i - 1) // 2 + (j - i)


def _leading_minors(m: Sequence[Sequence[float]]) -> list[float]:
    d = len(m)
    out = [m[0][0]]
    if d >= 2:
        out.append(m[0][0] * m[1][1] - m[0][1] * m[1][0])
    if d == 3:
        out.append(_det3(m))
    return out


def _det3(m) -> float:
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


@dataclass(frozen=True)
class SpdTensor:
    """Symmetric positive definite ``dim x dim`` matrix in packed storage."""

    dim: int
    entries: tuple

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dim}")
        entries = tuple(float(e) for e in self.entries)
        if len(entries) != packed_size(self.dim):
            raise ValueError(
                f"{self.dim}x{self.dim} tensor needs {packed_size(self.dim)} entries, got {len(entries)}"
            )
        if not all(math.isfinite(e) for e in entries):
            raise NotPositiveDefinite("tensor entries must be finite")
        object.__setattr__(self, "entries", entries)
        rows = self.rows()
        scale = max(abs(rows[i][i]) for i in range(self.dim))
        for k, minor in enumerate(_leading_minors(rows), start=1):
            if not minor > SPD_RTOL * scale**k:
                raise NotPositiveDefinite(f"leading minor {k} is {minor!r}; matrix is not SPD")

    @classmethod
    def from_matrix(cls, m) -> "SpdTensor":
        a = np.asarray(m, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("expected a square matrix")
        if not np.allclose(a, a.T, rtol=1e-12, atol=0.0):
            raise ValueError("matrix is not symmetric")
        d = a.shape[0]
        return cls(d, tuple(a[i, j] for i in range(d) for j in range(i, d)))

    @classmethod
    def diag(cls, *values: float) -> "SpdTensor":
        d = len(values)
        return cls.from_matrix(np.diag(np.asarray(values, dtype=float)).reshape(d, d))

    @classmethod
    def identity(cls, dim: int) -> "SpdTensor":
        return cls.diag(*([1.0] * dim))

    def __getitem__(self, ij) -> float:
        i, j = ij
        return self.entries[packed_index(i, j, self.dim)]

    def rows(self) -> tuple:
        d = self.dim
        return tuple(tuple(self[i, j] for j in range(d)) for i in range(d))

    def matrix(self) -> np.ndarray:
        return np.array(self.rows(), dtype=float)

    def dot(self, u, v) -> float:
        """Bilinear form u^T M v."""
        d = self.dim
        s = 0.0
        for i in range(d):
            for j in range(d):
                s += u[i] * self[i, j] * v[j]
        return s

    def quad(self, u) -> float:
        return self.dot(u, u)

    def is_diagonal(self) -> bool:
        d = self.dim
        return all(self[i, j] == 0.0 for i in range(d) for j in range(i + 1, d))

    def decoupled_axes(self) -> list[int]:
        """Axes whose off-diagonal row entries are all exactly zero."""
        d = self.dim
        return [i for i in range(d) if all(self[i, j] == 0.0 for j in range(d) if j != i)]

    def submatrix(self, axes: Sequence[int]) -> "SpdTensor":
        return SpdTensor(
            len(axes),
            tuple(self[axes[a], axes[b]] for a in range(len(axes)) for b in range(a, len(axes))),
        )

    def scaled(self, c: float) -> "SpdTensor":
        return SpdTensor(self.dim, tuple(c * e for e in self.entries))


def _check_dim(M: SpdTensor, u) -> None:
    if len(u) != M.dim:
        raise ValueError(f"vector of length {len(u)} does not match tensor dimension {M.dim}")


def norm(M: SpdTensor, u) -> float:
    """Anisotropic norm sqrt(u^T M u)."""
    _check_dim(M, u)
    q = M.quad(u)
    return math.sqrt(q) if q > 0.0 else 0.0


def eigvalsh(M: SpdTensor) -> tuple:
    """Eigenvalues of a symmetric tensor in increasing order, closed form."""
    return _eigvalsh_packed(M.dim, M.entries)


def _eigvalsh_packed(d: int, entries) -> tuple:
    if d == 1:
        return (entries[0],)
    if d == 2:
        a, b, c = entries
        mean = 0.5 * (a + c)
        rad = math.hypot(0.5 * (a - c), b)
        hi = mean + rad
        # product form keeps the small eigenvalue accurate
        lo = (a * c - b * b) / hi if hi > 0.0 else mean - rad
        return (lo, hi)
    a11, a12, a13, a22, a23, a33 = entries
    p1 = a12 * a12 + a13 * a13 + a23 * a23
    if p1 == 0.0:
        return tuple(sorted((a11, a22, a33)))
    q = (a11 + a22 + a33) / 3.0
    p2 = (a11 - q) ** 2 + (a22 - q) ** 2 + (a33 - q) ** 2 + 2.0 * p1
    p = math.sqrt(p2 / 6.0)
    b = (
        (a11 - q, a12, a13),
        (a12, a22 - q, a23),
        (a13, a23, a33 - q),
    )
    r = _det3(b) / (2.0 * p**3)
    r = min(1.0, max(-1.0, r))
    phi = math.acos(r) / 3.0
    e_hi = q + 2.0 * p * math.cos(phi)
    e_lo = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    e_mid = 3.0 * q - e_hi - e_lo
    # acos is ill-conditioned near +-1; two Newton steps on det(A - t I) restore accuracy
    return tuple(sorted(_newton_polish(entries, e) for e in (e_lo, e_mid, e_hi)))


def _newton_polish(entries, t: float, steps: int = 2) -> float:
    a11, a12, a13, a22, a23, a33 = entries
    for _ in range(steps):
        b11, b22, b33 = a11 - t, a22 - t, a33 - t
        m1 = b22 * b33 - a23 * a23
        m2 = b11 * b33 - a13 * a13
        m3 = b11 * b22 - a12 * a12
        p = b11 * m1 - a12 * (a12 * b33 - a23 * a13) + a13 * (a12 * a23 - b22 * a13)
        dp = -(m1 + m2 + m3)
        if dp == 0.0:
            break
        step = p / dp
        if not math.isfinite(step) or abs(step) > 1e-3 * (abs(t) + abs(a11) + abs(a22) + abs(a33)):
            break
        t -= step
    return t


def anisotropy_ratio(M: SpdTensor) -> float:
    """kappa(M) = sqrt(lambda_max / lambda_min) >= 1."""
    ev = eigvalsh(M)
    lo, hi = ev[0], ev[-1]
    if lo <= 0.0:
        raise NotPositiveDefinite("non-positive eigenvalue")
    return max(1.0, math.sqrt(hi / lo))


def _cholesky(M: SpdTensor) -> list:
    d = M.dim
    L = [[0.0] * d for _ in range(d)]
    for i in range(d):
        for j in range(i + 1):
            s = M[i, j] - sum(L[i][k] * L[j][k] for k in range(j))
            L[i][j] = math.sqrt(s) if i == j else s / L[j][j]
    return L


def _lower_solve(L, b) -> list:
    x = []
    for i in range(len(b)):
        x.append((b[i] - sum(L[i][k] * x[k] for k in range(i))) / L[i][i])
    return x


def multiplicative_distance(M: SpdTensor, N: SpdTensor) -> float:
    """sup over u != 0 of |ln ||u||_M - ln ||u||_N|.

    Equals half the largest |ln lambda| over the eigenvalues of N^{-1} M,
    obtained here from the symmetric similar matrix L^{-1} M L^{-T}.
    """
    if M.dim != N.dim:
        raise ValueError("tensor dimensions differ")
    d = M.dim
    L = _cholesky(N)
    # columns of L^{-1} M, then rows of L^{-1} (L^{-1} M)^T
    cols = [_lower_solve(L, [M[i, j] for i in range(d)]) for j in range(d)]
    left = [[cols[j][i] for j in range(d)] for i in range(d)]  # L^{-1} M
    c = [_lower_solve(L, left[i]) for i in range(d)]  # rows of (L^{-1} M) L^{-T}
    # no SpdTensor here: the similar matrix may be too ill-conditioned for the construction check
    ev = _eigvalsh_packed(d, tuple(0.5 * (c[i][j] + c[j][i]) for i in range(d) for j in range(i, d)))
    return 0.5 * max(abs(math.log(e)) for e in ev)


def rescale_by_spacing(M: SpdTensor, h) -> SpdTensor:
    """H M H with H = diag(h): the tensor acting on integer grid offsets."""
    if len(h) != M.dim:
        raise ValueError("spacing length does not match tensor dimension")
    if any(not hi > 0.0 for hi in h):
        raise ValueError(f"spacing must be positive, got {tuple(h)}")
    d = M.dim
    return SpdTensor(d, tuple(M[i, j] * h[i] * h[j] for i in range(d) for j in range(i, d)))
