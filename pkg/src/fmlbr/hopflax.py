"""Causal Hopf-Lax update over the facets of a stencil.

For a facet with offsets v_1..v_k, Gram matrix G = (v_i^T M v_j) and
neighbour values D, the update is the minimum over the facet of
``||sum a_i v_i||_M + sum a_i D_i``. On the relative interior it reduces to
the larger root of ``(t 1 - D)^T G^{-1} (t 1 - D) = 1``; boundary minima are
found on sub-facets.

The arithmetic here is mirrored operation by operation in the compiled core,
so both backends agree to the last bit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .stencil import KIND_NS, KIND_NV, KIND_SIMP, KIND_TABLES

__all__ = ["FacetSolution", "facet_solve", "stencil_update", "kind_facets", "DISC_RTOL"]

DISC_RTOL = 1e-14


@dataclass(frozen=True)
class FacetSolution:
    value: float
    weights: tuple
    facet: tuple  # vertex positions (facet_solve) or node indices (stencil_update)
    simplex: int = -1
    subset: tuple = ()


def _adjugate(g, k):
    if k == 2:
        det = g[0][0] * g[1][1] - g[0][1] * g[0][1]
        return [[g[1][1], -g[0][1]], [-g[0][1], g[0][0]]], det
    c00 = g[1][1] * g[2][2] - g[1][2] * g[1][2]
    c01 = g[0][2] * g[1][2] - g[0][1] * g[2][2]
    c02 = g[0][1] * g[1][2] - g[0][2] * g[1][1]
    c11 = g[0][0] * g[2][2] - g[0][2] * g[0][2]
    c12 = g[0][1] * g[0][2] - g[0][0] * g[1][2]
    c22 = g[0][0] * g[1][1] - g[0][1] * g[0][1]
    det = g[0][0] * c00 + g[0][1] * c01 + g[0][2] * c02
    return [[c00, c01, c02], [c01, c11, c12], [c02, c12, c22]], det


def interior_solve(g, delta):
    """(value, weights) of the interior critical point, or None if it is not admissible."""
    k = len(delta)
    if k == 1:
        return delta[0] + math.sqrt(g[0][0]), (1.0,)
    adj, det = _adjugate(g, k)
    m = max(delta)
    dp = [x - m for x in delta]
    a = 0.0
    b = 0.0
    c = 0.0
    for i in range(k):
        ri = 0.0
        si = 0.0
        for j in range(k):
            ri += adj[i][j]
            si += adj[i][j] * dp[j]
        a += ri
        b += si
        c += dp[i] * si
    c -= det
    disc = b * b - a * c
    if disc < 0.0:
        if disc < -DISC_RTOL * (b * b + abs(a * c)):
            return None
        disc = 0.0
    # larger root only; t may be negative on non-acute facets
    t = (b + math.sqrt(disc)) / a
    w = []
    total = 0.0
    for i in range(k):
        s = 0.0
        for j in range(k):
            s += adj[i][j] * (t - dp[j])
        if not s > 0.0:
            return None
        w.append(s)
        total += s
    return m + t, tuple(x / total for x in w)


def _check_gram(g, k):
    minors = [g[0][0]]
    if k >= 2:
        minors.append(g[0][0] * g[1][1] - g[0][1] * g[1][0])
    if k == 3:
        minors.append(_adjugate(g, 3)[1])
    scale = max(abs(g[i][i]) for i in range(k))
    for p, mnr in enumerate(minors, start=1):
        if not mnr > 1e-14 * scale**p:
            raise ValueError("Gram matrix is not positive definite (degenerate facet)")


def facet_solve(gram, delta) -> FacetSolution:
    """Minimal Hopf-Lax value over a facet, searching sub-facets when needed.

    Sub-facets are visited by decreasing size, in combination order, and the
    first strict minimum is kept.
    """
    g = [[float(x) for x in row] for row in np.asarray(gram, dtype=float)]
    delta = [float(x) for x in delta]
    k = len(delta)
    if k < 1 or len(g) != k or any(len(r) != k for r in g):
        raise ValueError("gram must be k x k with k = len(delta) >= 1")
    if any(not math.isfinite(x) for x in delta):
        raise ValueError("facet values must be finite")
    if any(abs(g[i][j] - g[j][i]) > 1e-12 * max(1.0, abs(g[i][j])) for i in range(k) for j in range(k)):
        raise ValueError("Gram matrix is not symmetric")
    _check_gram(g, k)
    best = None
    for size in range(k, 0, -1):
        for sub in itertools.combinations(range(k), size):
            gs = [[g[i][j] for j in sub] for i in sub]
            r = interior_solve(gs, [delta[i] for i in sub])
            if r is not None and (best is None or r[0] < best.value):
                w = [0.0] * k
                for i, wi in zip(sub, r[1]):
                    w[i] = wi
                best = FacetSolution(r[0], tuple(w), sub, -1, sub)
    return best


# --------------------------------------------------------------------------
# stencil-wide update


def _kind_facets(kind):
    ns = int(KIND_NS[kind])
    d = KIND_TABLES[kind].dim
    out = []
    for size in range(d, 0, -1):
        for s in range(ns):
            idx = tuple(int(i) for i in KIND_SIMP[kind, s, :d])
            for sub in itertools.combinations(range(d), size):
                out.append((s, tuple(idx[i] for i in sub)))
    return out


KIND_FACETS = {k: _kind_facets(k) for k in KIND_TABLES}

FMAX = max(len(f) for f in KIND_FACETS.values())
FJMAX = 64


def _packed_facets():
    """Facet tables for the compiled core.

    ``facet[k, f] = (simplex, size, v0, v1, v2)`` in enumeration order, and
    ``vfacet[k, j, :nvfacet[k, j]]`` the facets containing vertex j.
    """
    K = max(KIND_TABLES) + 1
    nf = np.zeros(K, np.int32)
    fac = np.zeros((K, FMAX, 5), np.int32)
    nvf = np.zeros((K, int(KIND_NV.max())), np.int32)
    vfac = np.zeros((K, int(KIND_NV.max()), FJMAX), np.int32)
    for k, facets in KIND_FACETS.items():
        nf[k] = len(facets)
        for f, (s, verts) in enumerate(facets):
            fac[k, f, 0] = s
            fac[k, f, 1] = len(verts)
            fac[k, f, 2: 2 + len(verts)] = verts
            for j in verts:
                vfac[k, j, nvf[k, j]] = f
                nvf[k, j] += 1
    assert nvf.max() <= FJMAX
    return nf, fac, nvf, vfac


KIND_NF, KIND_FACET, KIND_NVF, KIND_VFACET = _packed_facets()


def kind_facets(kind: int) -> list:
    """(simplex, vertex ids) candidate facets in argmin enumeration order."""
    return KIND_FACETS[kind]


def _dot(m, d, u, v):
    # same entry order as SpdTensor.dot, m packed
    s = 0.0
    for i in range(d):
        for j in range(d):
            a, b = (i, j) if i <= j else (j, i)
            s += u[i] * m[a * d - a * (a - 1) // 2 + (b - a)] * v[j]
    return s


class NodeStencil:
    """Decoded stencil of one node: vertex offsets, node ids, valid simplices."""

    __slots__ = ("x", "kind", "offsets", "nodes", "smask", "m", "d")

    def __init__(self, st, x: int, strides):
        self.x = x
        k, B = st._kb(x)
        self.kind = k
        d = st.dim
        self.d = d
        coef = KIND_TABLES[k].coefs
        Bl = B.tolist()
        offs = []
        nodes = []
        vm = int(st.vmask[x])
        for i in range(int(KIND_NV[k])):
            c = coef[i]
            off = tuple(sum(c[a] * Bl[a][j] for a in range(d)) for j in range(d))
            offs.append(off)
            if (vm >> i) & 1:
                nodes.append(x + sum(o * s for o, s in zip(off, strides)))
            else:
                nodes.append(-1)
        self.offsets = offs
        self.nodes = nodes
        self.smask = int(st.smask[x])
        self.m = [float(e) for e in st.mt[x]]


def strides_of(dims):
    out = []
    acc = 1
    for n in reversed(dims):
        out.append(acc)
        acc *= n
    return tuple(reversed(out))


def _facet_value(ns: NodeStencil, verts, values):
    d = ns.d
    delta = [values[ns.nodes[i]] for i in verts]
    offs = [ns.offsets[i] for i in verts]
    k = len(verts)
    g = [[0.0] * k for _ in range(k)]
    for i in range(k):
        for j in range(i, k):
            g[i][j] = g[j][i] = _dot(ns.m, d, offs[i], offs[j])
    return interior_solve(g, delta)


def node_update(ns: NodeStencil, values, accepted=None, y_vidx: int = -1):
    """Hopf-Lax value at a decoded node; filtered when ``accepted`` is given.

    Returns (value, simplex, vertex ids, weights); value is +inf and the rest
    None when no facet qualifies.
    """
    best = math.inf
    arg = (None, None, None)
    for s, verts in KIND_FACETS[ns.kind]:
        if not (ns.smask >> s) & 1:
            continue
        if accepted is not None:
            if y_vidx not in verts:
                continue
            if not all(accepted[ns.nodes[i]] for i in verts):
                continue
        if not all(math.isfinite(values[ns.nodes[i]]) for i in verts):
            continue
        r = _facet_value(ns, verts, values)
        if r is not None and r[0] < best:
            best = r[0]
            arg = (s, verts, r[1])
    return (best,) + arg


def stencil_update(field, x: int, stencils, accepted=None, y: int | None = None):
    """Hopf-Lax update at node x over its clipped stencil.

    With ``accepted`` (boolean array) and ``y``, only facets whose vertices
    are all accepted and include y take part. Returns (value, FacetSolution
    or None); the solution's facet lists node indices.
    """
    values = field.values if hasattr(field, "values") else np.asarray(field)
    ns = NodeStencil(stencils, int(x), strides_of(stencils.dims))
    vals = values.tolist() if isinstance(values, np.ndarray) else list(values)
    yv = -1
    if accepted is not None:
        if y is None:
            raise ValueError("filtered update needs the last accepted node y")
        acc = np.asarray(accepted, dtype=bool).tolist()
        if int(y) in ns.nodes:
            yv = ns.nodes.index(int(y))
        else:
            return math.inf, None
    else:
        acc = None
    value, s, verts, w = node_update(ns, vals, acc, yv)
    if s is None:
        return math.inf, None
    return value, FacetSolution(value, w, tuple(ns.nodes[i] for i in verts), s, verts)
