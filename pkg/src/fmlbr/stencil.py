"""Reduced meshes, classical stencils and per-node grid stencils.

Every stencil is encoded as a *kind* (a canonical simplicial fan around the
origin, written in coefficients of a basis) together with a per-node integer
basis. The vertex offsets of node ``x`` are ``coef @ basis[x]``; for fixed
stencils the basis is the identity and shared by all nodes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .lbr import reduce_basis
from .tensor import SpdTensor

__all__ = [
    "StencilMesh",
    "MeshReport",
    "Kind",
    "KIND_TABLES",
    "build_reduced_mesh",
    "reduced_mesh_kind",
    "mesh_from_kind",
    "validate_mesh",
    "mesh_anisotropy_bound",
    "classical_mesh",
    "GridStencils",
    "build_grid_stencils",
    "FIXED_KINDS",
]


class Kind:
    LBR2 = 0
    AXIS2 = 1
    LBR3_ODD = 2
    LBR3_EVEN = 3
    AXIS3 = 4
    BLOCK21 = 5
    FM8 = 6
    FM26 = 7
    TRI2 = 8
    KUHN3 = 9


VMAX = 26
SMAX = 48


@dataclass(frozen=True)
class StencilMesh:
    """Simplicial fan around the origin: each simplex lists its nonzero vertices."""

    dim: int
    simplices: tuple

    @property
    def vertices(self) -> list:
        seen: dict = {}
        for s in self.simplices:
            for v in s:
                seen.setdefault(tuple(v), None)
        return list(seen)

    def __len__(self) -> int:
        return len(self.simplices)


# --------------------------------------------------------------------------
# canonical tables


@dataclass(frozen=True)
class KindTable:
    name: str
    dim: int
    coefs: tuple  # vertex coefficient vectors w.r.t. the basis rows
    simplices: tuple  # vertex index tuples


def _table(name: str, dim: int, simplices, with_opposites: bool) -> KindTable:
    simplices = [tuple(tuple(v) for v in s) for s in simplices]
    if with_opposites:
        simplices = simplices + [tuple(tuple(-a for a in v) for v in s) for s in simplices]
    index: dict = {}
    for s in simplices:
        for v in s:
            index.setdefault(v, len(index))
    return KindTable(name, dim, tuple(index), tuple(tuple(index[v] for v in s) for s in simplices))


def _lin(*terms):
    """Coefficient vector from (coefficient, axis) pairs over (u, v, w)."""
    out = [0, 0, 0]
    for c, k in terms:
        out[k] += c
    return tuple(out)


U, V, W = 0, 1, 2


def _odd_table():
    u = _lin((1, U))
    v = _lin((1, V))
    w = _lin((1, W))
    wv = _lin((1, W), (1, V))
    wvu = _lin((1, W), (1, V), (-1, U))
    wu = _lin((1, W), (-1, U))
    mv = _lin((-1, V))
    uv = _lin((1, U), (-1, V))
    vu = _lin((1, V), (-1, U))
    mu = _lin((-1, U))
    return [
        (w, u, wv), (w, wv, wvu), (w, wvu, wu),
        (w, wu, mv), (w, mv, uv), (w, uv, u),
        (v, wv, u), (v, wvu, wv), (v, vu, wvu),
        (mu, mv, wu), (mu, wu, wvu), (mu, wvu, vu),
    ]


def _even_table():
    u = _lin((1, U))
    v = _lin((1, V))
    w = _lin((1, W))
    wu = _lin((1, W), (-1, U))
    vu = _lin((1, V), (-1, U))
    mu = _lin((-1, U))
    wv = _lin((1, W), (-1, V))
    mv = _lin((-1, V))
    uv = _lin((1, U), (-1, V))
    wvu = _lin((1, W), (-1, V), (1, U))
    return [
        (u, v, w), (w, v, wu), (wu, v, vu),
        (wu, vu, mu), (wu, mu, wv), (wv, mu, mv),
        (wv, mv, uv), (wv, uv, wvu), (wvu, uv, u),
        (u, w, wvu), (w, wv, wvu), (w, wu, wv),
    ]


def _ring(points):
    return [(points[i], points[(i + 1) % len(points)]) for i in range(len(points))]


def _fm26_simplices():
    out = []
    for axis in range(3):
        for sign in (1, -1):
            c = [0, 0, 0]
            c[axis] = sign
            t1, t2 = [k for k in range(3) if k != axis]
            for s1 in (1, -1):
                for s2 in (1, -1):
                    a = [0, 0, 0]
                    a[t1] = s1
                    b = [0, 0, 0]
                    b[t2] = s2
                    ca = tuple(c[k] + a[k] for k in range(3))
                    cb = tuple(c[k] + b[k] for k in range(3))
                    cab = tuple(c[k] + a[k] + b[k] for k in range(3))
                    out.append((tuple(c), ca, cab))
                    out.append((tuple(c), cb, cab))
    return out


def _kuhn_simplices():
    out = []
    for corner in itertools.product((-1, 0), repeat=3):
        for perm in itertools.permutations(range(3)):
            p = list(corner)
            verts = [tuple(p)]
            for k in perm:
                p[k] += 1
                verts.append(tuple(p))
            if (0, 0, 0) in verts:
                out.append(tuple(v for v in verts if v != (0, 0, 0)))
    return out


def _block21_simplices():
    tri = [((1, 0), (0, 1)), ((0, 1), (-1, 1)), ((-1, 1), (-1, 0)),
           ((-1, 0), (0, -1)), ((0, -1), (1, -1)), ((1, -1), (1, 0))]
    out = []
    for a, b in tri:
        for s in (1, -1):
            out.append(((a[0], a[1], 0), (b[0], b[1], 0), (0, 0, s)))
    return out


def _axis3_simplices():
    return [tuple(tuple(s[k] if k == i else 0 for k in range(3)) for i in range(3))
            for s in itertools.product((1, -1), repeat=3)]


KIND_TABLES = {
    Kind.LBR2: _table("lbr2", 2, [((1, 0), (0, 1)), ((0, 1), (-1, 1)), ((-1, 1), (-1, 0))], True),
    Kind.AXIS2: _table("axis2", 2, _ring([(1, 0), (0, 1), (-1, 0), (0, -1)]), False),
    Kind.LBR3_ODD: _table("lbr3-odd", 3, _odd_table(), True),
    Kind.LBR3_EVEN: _table("lbr3-even", 3, _even_table(), True),
    Kind.AXIS3: _table("axis3", 3, _axis3_simplices(), False),
    Kind.BLOCK21: _table("block21", 3, _block21_simplices(), False),
    Kind.FM8: _table("fm8", 2, _ring([(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]), False),
    Kind.FM26: _table("fm26", 3, _fm26_simplices(), False),
    Kind.TRI2: _table("tri2", 2, _ring([(1, 0), (1, 1), (0, 1), (-1, 0), (-1, -1), (0, -1)]), False),
    Kind.KUHN3: _table("kuhn3", 3, _kuhn_simplices(), False),
}

FIXED_KINDS = {
    "fm4": Kind.AXIS2,
    "fm8": Kind.FM8,
    "fm6": Kind.AXIS3,
    "fm26": Kind.FM26,
    "tri2": Kind.TRI2,
    "kuhn3": Kind.KUHN3,
}


def _packed_tables():
    K = max(KIND_TABLES) + 1
    nv = np.zeros(K, np.int32)
    ns = np.zeros(K, np.int32)
    kd = np.zeros(K, np.int32)
    coef = np.zeros((K, VMAX, 3), np.int8)
    simp = np.zeros((K, SMAX, 3), np.uint8)
    vsimp = np.zeros((K, VMAX), np.uint64)
    for k, t in KIND_TABLES.items():
        nv[k] = len(t.coefs)
        ns[k] = len(t.simplices)
        kd[k] = t.dim
        for i, c in enumerate(t.coefs):
            coef[k, i, : len(c)] = c
        for s, idx in enumerate(t.simplices):
            simp[k, s, : len(idx)] = idx
            for i in idx:
                vsimp[k, i] |= np.uint64(1) << np.uint64(s)
    return nv, ns, kd, coef, simp, vsimp


KIND_NV, KIND_NS, KIND_DIM, KIND_COEF, KIND_SIMP, KIND_VSIMP = _packed_tables()


def mesh_from_kind(kind: int, basis: Sequence[Sequence[int]]) -> StencilMesh:
    t = KIND_TABLES[kind]
    B = np.asarray(basis, dtype=np.int64).reshape(t.dim, t.dim)
    verts = [tuple(int(x) for x in np.asarray(c[: t.dim], dtype=np.int64) @ B) for c in t.coefs]
    return StencilMesh(t.dim, tuple(tuple(verts[i] for i in s) for s in t.simplices))


# --------------------------------------------------------------------------
# construction from a tensor


def _neg(u):
    return tuple(-a for a in u)


def _lbr2(M: SpdTensor):
    b = reduce_basis(M).vectors
    u, v = b[0], b[1]
    if M.dot(u, v) < 0.0:
        v = _neg(v)
    return u, v


def _lbr3(M: SpdTensor):
    b = reduce_basis(M).vectors
    signs = list(itertools.product((1, -1), repeat=3))
    for e in signs:
        u, v, w = (tuple(e[i] * a for a in b[i]) for i in range(3))
        if M.dot(u, v) >= 0.0 and M.dot(u, w) >= 0.0 and M.dot(v, w) <= 0.0:
            return Kind.LBR3_ODD, (u, v, w)
    for perm in itertools.permutations(range(3)):
        for e in signs:
            u, v, w = (tuple(e[i] * a for a in b[perm[i]]) for i in range(3))
            uv, vw, uw = M.dot(u, v), M.dot(v, w), M.dot(u, w)
            if vw >= uv >= uw >= 0.0:
                return Kind.LBR3_EVEN, (u, v, w)
    raise AssertionError("no sign/permutation normalisation found")  # unreachable


def _identity(d):
    return tuple(tuple(int(i == j) for j in range(d)) for i in range(d))


def reduced_mesh_kind(M: SpdTensor, axis_if_diagonal: bool = False):
    """(kind, basis rows) encoding the M-reduced mesh used at a node.

    In 3D an exactly decoupled axis triggers the block-diagonal product
    construction; a diagonal 3D tensor yields the 6-point axis fan. In 2D the
    axis fan is used for diagonal tensors only when ``axis_if_diagonal``.
    """
    d = M.dim
    if d == 2:
        if axis_if_diagonal and M.is_diagonal():
            return Kind.AXIS2, _identity(2)
        return Kind.LBR2, _lbr2(M)
    if d != 3:
        raise ValueError("kind encoding covers dimensions 2 and 3")
    dec = M.decoupled_axes()
    if len(dec) == 3:
        return Kind.AXIS3, _identity(3)
    if len(dec) == 1:
        k = dec[0]
        rest = [i for i in range(3) if i != k]
        u2, v2 = _lbr2(M.submatrix(rest))

        def embed(a):
            out = [0, 0, 0]
            out[rest[0]], out[rest[1]] = a
            return tuple(out)

        e = [0, 0, 0]
        e[k] = 1
        return Kind.BLOCK21, (embed(u2), embed(v2), tuple(e))
    return _lbr3(M)


def build_reduced_mesh(M: SpdTensor) -> StencilMesh:
    """M-reduced mesh: 2 segments (1D), 6 triangles (2D), 24 tetrahedra (3D, coupled axes)."""
    if M.dim == 1:
        return StencilMesh(1, (((1,),), ((-1,),)))
    return mesh_from_kind(*reduced_mesh_kind(M))


def classical_mesh(name: str) -> StencilMesh:
    """Fixed stencils: fm4, fm8 (2D), fm6, fm26 (3D), tri2 / kuhn3 (trivial triangulations)."""
    kind = FIXED_KINDS[name]
    return mesh_from_kind(kind, _identity(KIND_TABLES[kind].dim))


# --------------------------------------------------------------------------
# checks


@dataclass
class MeshReport:
    covers: bool
    unimodular: bool
    acute: bool
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.covers and self.unimodular and self.acute

    def __str__(self) -> str:
        lines = [
            f"(a) neighborhood of origin: {'pass' if self.covers else 'FAIL'}",
            f"(b) lattice simplices of volume 1/d!: {'pass' if self.unimodular else 'FAIL'}",
            f"(c) acute vertex pairs: {'pass' if self.acute else 'FAIL'}",
        ]
        lines += [f"  - {f}" for f in self.failures[:10]]
        return "\n".join(lines)


def _int_det(vs) -> int:
    a = list(vs)
    if len(a) == 1:
        return a[0][0]
    if len(a) == 2:
        return a[0][0] * a[1][1] - a[0][1] * a[1][0]
    return (
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    )


def validate_mesh(M: SpdTensor, T: StencilMesh, n_directions: int = 1000, seed: int = 0,
                  tol: float = 1e-9) -> MeshReport:
    if M.dim != T.dim:
        raise ValueError("tensor and mesh dimensions differ")
    failures = []
    unimodular = True
    for s in T.simplices:
        if abs(_int_det(s)) != 1:
            unimodular = False
            failures.append(f"simplex {s} has determinant {_int_det(s)}")
    acute = True
    for s in T.simplices:
        for a, b in itertools.combinations(s, 2):
            sp = M.dot(a, b)
            if sp < -tol * math.sqrt(M.quad(a) * M.quad(b)):
                acute = False
                failures.append(f"vertices {a}, {b} have M-scalar product {sp:.6g}")
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((n_directions, T.dim))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    strict = np.zeros(n_directions, int)
    loose = np.zeros(n_directions, int)
    for s in T.simplices:
        A = np.array(s, dtype=float).T
        if abs(np.linalg.det(A)) < 0.5:
            continue
        coef = np.linalg.solve(A, w.T).T
        mn = coef.min(axis=1)
        strict += mn > tol
        loose += mn >= -tol
    bad = np.flatnonzero((loose < 1) | (strict > 1))
    covers = bad.size == 0
    if not covers:
        failures.append(f"{bad.size} of {n_directions} sampled directions not covered exactly once")
    return MeshReport(covers, unimodular, acute, failures)


def mesh_anisotropy_bound(T: StencilMesh) -> tuple:
    """(gamma, kappa) with gamma the smallest cosine between vertices of a common simplex."""
    gamma = math.inf
    for s in T.simplices:
        for a, b in itertools.combinations(s, 2):
            c = sum(x * y for x, y in zip(a, b)) / math.sqrt(
                sum(x * x for x in a) * sum(y * y for y in b)
            )
            gamma = min(gamma, c)
    if gamma >= 1.0:
        return gamma, math.inf
    return gamma, math.sqrt((1.0 + gamma) / (1.0 - gamma))


# --------------------------------------------------------------------------
# grid stencils


@dataclass
class GridStencils:
    """Static per-node stencils on a box grid, clipped, with their transpose.

    ``smask[x]`` marks the simplices of node x whose vertices all lie inside
    the grid; ``vmask[x]`` the vertices used by those simplices. The reversed
    stencil of y is ``rev_node[rev_ptr[y]:rev_ptr[y+1]]``, with
    ``rev_vidx`` the index of y in the vertex list of each such node.
    """

    dims: tuple
    spacing: tuple
    mt: np.ndarray  # (N, P) spacing-rescaled tensors
    kind: np.ndarray  # (N,) uint8, or (1,) when shared
    basis: np.ndarray  # (N, d, d) int16, or (1, d, d) when shared
    smask: np.ndarray
    vmask: np.ndarray
    rev_ptr: np.ndarray
    rev_node: np.ndarray
    rev_vidx: np.ndarray
    label: str = "fmlbr"

    @property
    def dim(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    def _kb(self, x: int):
        k = int(self.kind[x if self.kind.shape[0] > 1 else 0])
        B = self.basis[x if self.basis.shape[0] > 1 else 0].astype(np.int64)
        return k, B

    def vertex_offsets(self, x: int) -> np.ndarray:
        """All vertex offsets of the unclipped mesh at x, in kind order."""
        k, B = self._kb(x)
        d = self.dim
        return KIND_COEF[k, : KIND_NV[k], :d].astype(np.int64) @ B

    def mesh(self, x: int) -> StencilMesh:
        k, B = self._kb(x)
        return mesh_from_kind(k, B)

    def direct(self, x: int) -> list:
        """Clipped simplices at x, each a tuple of vertex indices into vertex_offsets(x)."""
        k, _ = self._kb(x)
        m = int(self.smask[x])
        return [tuple(int(i) for i in KIND_SIMP[k, s, : self.dim])
                for s in range(KIND_NS[k]) if (m >> s) & 1]

    def direct_vertices(self, x: int) -> list:
        """Node indices of the vertices used by the clipped stencil of x."""
        offs = self.vertex_offsets(x)
        m = int(self.vmask[x])
        coords = np.array(np.unravel_index(x, self.dims))
        out = []
        for i in range(len(offs)):
            if (m >> i) & 1:
                out.append(int(np.ravel_multi_index(tuple(coords + offs[i]), self.dims)))
        return out

    def reversed(self, y: int) -> np.ndarray:
        return self.rev_node[self.rev_ptr[y]: self.rev_ptr[y + 1]]

    def direct_counts(self) -> np.ndarray:
        v = self.vmask.astype(np.uint64)
        counts = np.zeros(v.shape, np.int64)
        for i in range(VMAX):
            counts += ((v >> np.uint64(i)) & np.uint64(1)).astype(np.int64)
        return counts

    def reversed_counts(self) -> np.ndarray:
        return np.diff(self.rev_ptr)

    def empty_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.smask == 0)

    def nbytes(self) -> int:
        return sum(a.nbytes for a in (self.mt, self.kind, self.basis, self.smask, self.vmask,
                                      self.rev_ptr, self.rev_node, self.rev_vidx))


def build_grid_stencils(metric, stencil: str = "fmlbr", backend=None) -> GridStencils:
    """Per-node stencils for ``metric`` (a MetricGrid).

    ``stencil`` is ``fmlbr`` (reduced meshes of the spacing-rescaled tensors,
    axis fan where the tensor is exactly diagonal) or one of the fixed kinds.
    """
    from . import _backend

    core = _backend.get(backend)
    d = metric.dim
    mt = metric.scaled_tensors()
    N = mt.shape[0]
    if stencil == "fmlbr":
        kind, basis = core.lbr_bases(mt, d)
    else:
        k = FIXED_KINDS[stencil]
        if KIND_DIM[k] != d:
            raise ValueError(f"stencil {stencil!r} is {KIND_DIM[k]}D but the grid is {d}D")
        kind = np.full(1, k, np.uint8)
        basis = np.eye(d, dtype=np.int16)[None]
    dims = np.asarray(metric.dims, np.int64)
    smask, vmask = core.clip_masks(dims, kind, basis, KIND_NV, KIND_NS, KIND_COEF, KIND_SIMP)
    rev_ptr, rev_node, rev_vidx = core.reverse_stencils(dims, kind, basis, vmask, KIND_NV, KIND_COEF)
    assert smask.shape[0] == N
    return GridStencils(tuple(metric.dims), tuple(metric.spacing), mt, kind, basis, smask, vmask,
                        rev_ptr, rev_node, rev_vidx, label=stencil)
