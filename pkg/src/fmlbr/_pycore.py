"""Pure-Python kernels: same API and same floating-point operations as ``_core``."""

from __future__ import annotations

import heapq
import math

import numpy as np

from .hopflax import NodeStencil, node_update, strides_of
from .stencil import reduced_mesh_kind
from .tensor import SpdTensor

NAME = "python"


def lbr_bases(mt: np.ndarray, d: int):
    N = mt.shape[0]
    kind = np.empty(N, np.uint8)
    basis = np.empty((N, d, d), np.int16)
    for x in range(N):
        M = SpdTensor(d, tuple(mt[x].tolist()))
        k, B = reduced_mesh_kind(M, axis_if_diagonal=True)
        kind[x] = k
        basis[x] = B
    return kind, basis


def _iter_nodes(dims):
    return np.array(np.unravel_index(np.arange(int(np.prod(dims))), tuple(int(n) for n in dims))).T


def _offsets(kind, basis, x, nv, coef, d):
    k = int(kind[x if kind.shape[0] > 1 else 0])
    B = basis[x if basis.shape[0] > 1 else 0].astype(np.int64)
    return k, coef[k, : nv[k], :d].astype(np.int64) @ B


def clip_masks(dims, kind, basis, nv, ns, coef, simp):
    dims = np.asarray(dims, np.int64)
    d = len(dims)
    N = int(np.prod(dims))
    smask = np.zeros(N, np.uint64)
    vmask = np.zeros(N, np.uint64)
    for x, c in enumerate(_iter_nodes(dims)):
        k, offs = _offsets(kind, basis, x, nv, coef, d)
        p = c + offs
        inside = np.all((p >= 0) & (p < dims), axis=1)
        sm = 0
        vm = 0
        for s in range(ns[k]):
            idx = simp[k, s, :d]
            if inside[idx].all():
                sm |= 1 << s
                for i in idx:
                    vm |= 1 << int(i)
        smask[x] = sm
        vmask[x] = vm
    return smask, vmask


def reverse_stencils(dims, kind, basis, vmask, nv, coef):
    dims = np.asarray(dims, np.int64)
    d = len(dims)
    N = int(np.prod(dims))
    strides = np.array(strides_of(tuple(dims)), np.int64)
    lists = [[] for _ in range(N)]
    for x in range(N):
        k, offs = _offsets(kind, basis, x, nv, coef, d)
        vm = int(vmask[x])
        for i in range(nv[k]):
            if (vm >> i) & 1:
                y = x + int(offs[i] @ strides)
                lists[y].append((x, i))
    ptr = np.zeros(N + 1, np.int64)
    ptr[1:] = np.cumsum([len(a) for a in lists])
    node = np.empty(ptr[-1], np.int32)
    vidx = np.empty(ptr[-1], np.uint8)
    pos = 0
    for a in lists:
        for x, i in a:
            node[pos] = x
            vidx[pos] = i
            pos += 1
    return ptr, node, vidx


class _Decoder:
    def __init__(self, st):
        self.st = st
        self.strides = strides_of(st.dims)
        self.cache = {}

    def __call__(self, x):
        ns = self.cache.get(x)
        if ns is None:
            ns = self.cache[x] = NodeStencil(self.st, x, self.strides)
        return ns


def fast_march(st, seed_nodes, seed_vals, debug: bool = False):
    N = st.size
    values = [math.inf] * N
    accepted = [False] * N
    fixed = [False] * N
    heap = []
    for s, v in zip(seed_nodes, seed_vals):
        s = int(s)
        values[s] = float(v)
        fixed[s] = True
    for s in sorted(set(int(s) for s in seed_nodes)):
        heap.append((values[s], s))
    heapq.heapify(heap)
    decode = _Decoder(st)
    rev_ptr = st.rev_ptr.tolist()
    rev_node = st.rev_node.tolist()
    rev_vidx = st.rev_vidx.tolist()
    order = []
    pushes = len(heap)
    pops = 0
    updates = 0
    last = -math.inf
    while heap:
        v, y = heapq.heappop(heap)
        pops += 1
        if accepted[y]:
            continue
        accepted[y] = True
        order.append(y)
        if debug and v < last:
            raise AssertionError(f"acceptance order not monotone at node {y}: {v} < {last}")
        last = v
        for p in range(rev_ptr[y], rev_ptr[y + 1]):
            x = rev_node[p]
            if accepted[x] or fixed[x]:
                continue
            ns = decode(x)
            val, s, verts, w = node_update(ns, values, accepted, rev_vidx[p])
            updates += 1
            if debug and s is not None and all(wi > 0 for wi in w):
                if not all(val > values[ns.nodes[i]] for i in verts):
                    raise AssertionError(f"causality violated at node {x}")
            if val < values[x]:
                values[x] = val
                heapq.heappush(heap, (val, x))
                pushes += 1
    return np.array(values), np.array(order, np.int64), pushes, pops, updates


def agsi(st, seed_nodes, seed_vals, tol: float, max_updates: int):
    N = st.size
    values = [math.inf] * N
    fixed = [False] * N
    for s, v in zip(seed_nodes, seed_vals):
        values[int(s)] = float(v)
        fixed[int(s)] = True
    queued = {}
    heap = []
    for s in sorted(set(int(s) for s in seed_nodes)):
        heap.append((values[s], s))
        queued[s] = values[s]
    heapq.heapify(heap)
    decode = _Decoder(st)
    rev_ptr = st.rev_ptr.tolist()
    rev_node = st.rev_node.tolist()
    pushes = len(heap)
    pops = 0
    updates = 0
    while heap:
        key, x = heapq.heappop(heap)
        pops += 1
        if queued.get(x) != key:
            continue
        del queued[x]
        for p in range(rev_ptr[x], rev_ptr[x + 1]):
            w = rev_node[p]
            if fixed[w]:
                continue
            cand = node_update(decode(w), values)[0]
            updates += 1
            if updates > max_updates:
                raise RuntimeError(f"AGSI exceeded {max_updates} updates without converging")
            if cand < values[w] - tol:
                # commit now so later neighbours see it; the queue entry propagates it
                values[w] = cand
                queued[w] = cand
                heapq.heappush(heap, (cand, w))
                pushes += 1
    return np.array(values), pushes, pops, updates


def hopf_lax_all(st, values):
    decode = _Decoder(st)
    vals = np.asarray(values).tolist()
    out = np.empty(st.size)
    for x in range(st.size):
        out[x] = node_update(decode(x), vals)[0]
    return out


def hopf_lax_argmin(st, values, x: int):
    ns = NodeStencil(st, int(x), strides_of(st.dims))
    val, s, verts, w = node_update(ns, np.asarray(values).tolist())
    if s is None:
        return val, -1, (), ()
    return val, s, verts, w


__all__ = ["NAME", "lbr_bases", "clip_masks", "reverse_stencils", "fast_march", "agsi",
           "hopf_lax_all", "hopf_lax_argmin"]
