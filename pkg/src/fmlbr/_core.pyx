# cython: language_level=3
"""Compiled kernels: lattice reduction per node, stencil clipping and
transposition, the single-pass Dijkstra solver, AGSI and the Hopf-Lax operator.

Floating-point operations follow the pure-Python kernels one by one (built
with -ffp-contract=off), so both backends return identical bits.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, hypot, acos, cos, log, pow, ceil, copysign, INFINITY, M_PI
from libc.stdlib cimport malloc, realloc, free
from libc.stdint cimport uint8_t, int8_t, int16_t, int32_t, int64_t, uint64_t

from .stencil import (KIND_NV, KIND_NS, KIND_COEF, KIND_SIMP, Kind)
from .hopflax import KIND_NF, KIND_FACET, KIND_NVF, KIND_VFACET
from .lbr import ReductionError

cnp.import_array()

NAME = "cython"

cdef enum:
    VMAX = 26
    SMAX = 48
    FJMAX = 64

cdef int K_LBR2 = Kind.LBR2
cdef int K_AXIS2 = Kind.AXIS2
cdef int K_ODD = Kind.LBR3_ODD
cdef int K_EVEN = Kind.LBR3_EVEN
cdef int K_AXIS3 = Kind.AXIS3
cdef int K_BLOCK = Kind.BLOCK21

# --------------------------------------------------------------------------
# lattice reduction (mirrors lbr.py / stencil.py)


cdef inline int pidx(int i, int j, int d) noexcept nogil:
    cdef int t
    if i > j:
        t = i
        i = j
        j = t
    return i * d - (i * (i - 1)) // 2 + (j - i)


cdef inline double qdot(const double* m, int d, const long* u, const long* v) noexcept nogil:
    cdef double s = 0.0
    cdef int i, j
    for i in range(d):
        for j in range(d):
            s += <double>u[i] * m[pidx(i, j, d)] * <double>v[j]
    return s


cdef inline long rhz(double x) noexcept nogil:
    return <long>copysign(ceil(fabs(x) - 0.5), x)


cdef double det3s(double b00, double b01, double b02, double b11, double b12, double b22) noexcept nogil:
    return (b00 * (b11 * b22 - b12 * b12)
            - b01 * (b01 * b22 - b12 * b02)
            + b02 * (b01 * b12 - b11 * b02))


cdef double aniso(const double* m, int d) noexcept nogil:
    """anisotropy ratio; returns -1 for a non-positive eigenvalue"""
    cdef double a, b, c, mean, rad, hi, lo, p1, q, p2, p, r, phi, e_hi, e_lo, e_mid
    cdef double a11, a12, a13, a22, a23, a33
    if d == 2:
        a = m[0]
        b = m[1]
        c = m[2]
        mean = 0.5 * (a + c)
        rad = hypot(0.5 * (a - c), b)
        hi = mean + rad
        if hi > 0.0:
            lo = (a * c - b * b) / hi
        else:
            lo = mean - rad
    else:
        a11 = m[0]
        a12 = m[1]
        a13 = m[2]
        a22 = m[3]
        a23 = m[4]
        a33 = m[5]
        p1 = a12 * a12 + a13 * a13 + a23 * a23
        if p1 == 0.0:
            lo = a11
            hi = a11
            if a22 < lo:
                lo = a22
            if a33 < lo:
                lo = a33
            if a22 > hi:
                hi = a22
            if a33 > hi:
                hi = a33
        else:
            q = (a11 + a22 + a33) / 3.0
            p2 = pow(a11 - q, 2.0) + pow(a22 - q, 2.0) + pow(a33 - q, 2.0) + 2.0 * p1
            p = sqrt(p2 / 6.0)
            r = det3s(a11 - q, a12, a13, a22 - q, a23, a33 - q) / (2.0 * pow(p, 3.0))
            if r > 1.0:
                r = 1.0
            if r < -1.0:
                r = -1.0
            phi = acos(r) / 3.0
            e_hi = q + 2.0 * p * cos(phi)
            e_lo = q + 2.0 * p * cos(phi + 2.0 * M_PI / 3.0)
            e_mid = 3.0 * q - e_hi - e_lo
            lo = e_lo
            hi = e_lo
            if e_mid < lo:
                lo = e_mid
            if e_hi < lo:
                lo = e_hi
            if e_mid > hi:
                hi = e_mid
            if e_hi > hi:
                hi = e_hi
    if lo <= 0.0:
        return -1.0
    r = sqrt(hi / lo)
    if r > 1.0:
        return r
    return 1.0


cdef inline void vcopy(long* dst, const long* src) noexcept nogil:
    dst[0] = src[0]
    dst[1] = src[1]
    dst[2] = src[2]


cdef int gauss(const double* m, int d, long* u, long* v, int budget, int* iters) noexcept nogil:
    cdef double nu = qdot(m, d, u, u)
    cdef double nv = qdot(m, d, v, v)
    cdef long r
    cdef long t[3]
    cdef int it = 0, k
    while True:
        it += 1
        if it > budget:
            return -1
        r = rhz(qdot(m, d, u, v) / nv)
        for k in range(3):
            t[k] = u[k] - r * v[k]
        vcopy(u, v)
        vcopy(v, t)
        nu = nv
        nv = qdot(m, d, v, v)
        if not nu > nv:
            iters[0] = it
            return 0


cdef void closest_residual(const double* m, const long* b0, const long* b1, const long* t, long* out) noexcept nogil:
    cdef double g00 = qdot(m, 3, b0, b0)
    cdef double g01 = qdot(m, 3, b0, b1)
    cdef double g11 = qdot(m, 3, b1, b1)
    cdef double r0 = qdot(m, 3, b0, t)
    cdef double r1 = qdot(m, 3, b1, t)
    cdef double det = g00 * g11 - g01 * g01
    cdef double x0 = (g11 * r0 - g01 * r1) / det
    cdef double x1 = (g00 * r1 - g01 * r0) / det
    cdef long c0 = rhz(x0), c1 = rhz(x1), a, b
    cdef long cand[3]
    cdef double n, best_n = INFINITY
    cdef long offs[3]
    offs[0] = 0
    offs[1] = -1
    offs[2] = 1
    cdef int i, j, k
    for i in range(3):
        for j in range(3):
            a = c0 + offs[i]
            b = c1 + offs[j]
            for k in range(3):
                cand[k] = t[k] - a * b0[k] - b * b1[k]
            n = qdot(m, 3, cand, cand)
            if n < best_n:
                best_n = n
                vcopy(out, cand)


cdef inline void canonical_sign(long* u, int d) noexcept nogil:
    cdef int k
    for k in range(d):
        if u[k] != 0:
            if u[k] < 0:
                for k in range(d):
                    u[k] = -u[k]
            return


cdef bint final_less(const double* m, int d, const long* u, const long* v) noexcept nogil:
    """(quad, |components|, negative flags) lexicographic order"""
    cdef double qu = qdot(m, d, u, u), qv = qdot(m, d, v, v)
    cdef int k
    cdef long au, av
    if qu != qv:
        return qu < qv
    for k in range(d):
        au = u[k] if u[k] >= 0 else -u[k]
        av = v[k] if v[k] >= 0 else -v[k]
        if au != av:
            return au < av
    for k in range(d):
        if (u[k] < 0) != (v[k] < 0):
            return v[k] < 0
    return False


cdef void finalize(const double* m, int d, long (*b)[3]) noexcept nogil:
    cdef int i, j
    cdef long t[3]
    for i in range(d):
        canonical_sign(b[i], d)
    # stable insertion sort
    for i in range(1, d):
        vcopy(t, b[i])
        j = i - 1
        while j >= 0 and final_less(m, d, t, b[j]):
            vcopy(b[j + 1], b[j])
            j -= 1
        vcopy(b[j + 1], t)


cdef int reduce_basis_c(const double* m, int d, long (*b)[3]) noexcept nogil:
    """reduced basis into b (rows); 0 on success, -1 if the budget is exceeded"""
    cdef int i, j, k, budget, it, gi, total
    cdef double kappa
    cdef long t[3]
    cdef long r2[3]
    for i in range(3):
        for j in range(3):
            b[i][j] = 1 if i == j else 0
    kappa = aniso(m, d)
    if kappa < 0.0:
        return -2
    if kappa < 1.0 + 1e-12:
        finalize(m, d, b)
        return 0
    budget = <int>(64 + 8 * log(kappa))
    if d == 2:
        if gauss(m, d, b[0], b[1], budget, &it) != 0:
            return -1
        finalize(m, d, b)
        return 0
    total = 0
    for it in range(budget):
        total += 1
        # stable sort by quad
        for i in range(1, 3):
            vcopy(t, b[i])
            j = i - 1
            while j >= 0 and qdot(m, 3, t, t) < qdot(m, 3, b[j], b[j]):
                vcopy(b[j + 1], b[j])
                j -= 1
            vcopy(b[j + 1], t)
        if gauss(m, 3, b[0], b[1], budget, &gi) != 0:
            return -1
        total += gi
        closest_residual(m, b[0], b[1], b[2], r2)
        vcopy(b[2], r2)
        if not qdot(m, 3, r2, r2) < qdot(m, 3, b[1], b[1]):
            finalize(m, d, b)
            return 0
    return -1


cdef inline void negate(long* u) noexcept nogil:
    u[0] = -u[0]
    u[1] = -u[1]
    u[2] = -u[2]


cdef int mesh_basis(const double* m, int d, long (*out)[3]) noexcept nogil:
    """(kind, basis) as in stencil.reduced_mesh_kind(axis_if_diagonal=True); negative on error"""
    cdef long b[3][3]
    cdef double sub[3]
    cdef int i, j, rc, c, e0, e1, e2, kax, r0, r1, pi
    cdef long u[3]
    cdef long v[3]
    cdef long w[3]
    cdef double uv, vw, uw
    cdef int perms[6][3]
    for i in range(3):
        for j in range(3):
            out[i][j] = 1 if i == j else 0
    if d == 2:
        if m[1] == 0.0:
            return K_AXIS2
        rc = reduce_basis_c(m, 2, b)
        if rc != 0:
            return rc - 10
        vcopy(out[0], b[0])
        vcopy(out[1], b[1])
        if qdot(m, 2, out[0], out[1]) < 0.0:
            negate(out[1])
        return K_LBR2
    # 3D: decoupled axes (off-diagonal row entries exactly zero)
    cdef bint dec0 = m[1] == 0.0 and m[2] == 0.0
    cdef bint dec1 = m[1] == 0.0 and m[4] == 0.0
    cdef bint dec2 = m[2] == 0.0 and m[4] == 0.0
    cdef int ndec = dec0 + dec1 + dec2
    if ndec == 3:
        return K_AXIS3
    if ndec == 1:
        kax = 0 if dec0 else (1 if dec1 else 2)
        r0 = 0 if kax != 0 else 1
        r1 = 2 if kax != 2 else 1
        sub[0] = m[pidx(r0, r0, 3)]
        sub[1] = m[pidx(r0, r1, 3)]
        sub[2] = m[pidx(r1, r1, 3)]
        rc = reduce_basis_c(sub, 2, b)
        if rc != 0:
            return rc - 10
        if qdot(sub, 2, b[0], b[1]) < 0.0:
            negate(b[1])
        for i in range(3):
            for j in range(3):
                out[i][j] = 0
        out[0][r0] = b[0][0]
        out[0][r1] = b[0][1]
        out[1][r0] = b[1][0]
        out[1][r1] = b[1][1]
        out[2][kax] = 1
        return K_BLOCK
    rc = reduce_basis_c(m, 3, b)
    if rc != 0:
        return rc - 10
    for c in range(8):
        e0 = -1 if (c >> 2) & 1 else 1
        e1 = -1 if (c >> 1) & 1 else 1
        e2 = -1 if c & 1 else 1
        for j in range(3):
            u[j] = e0 * b[0][j]
            v[j] = e1 * b[1][j]
            w[j] = e2 * b[2][j]
        if qdot(m, 3, u, v) >= 0.0 and qdot(m, 3, u, w) >= 0.0 and qdot(m, 3, v, w) <= 0.0:
            vcopy(out[0], u)
            vcopy(out[1], v)
            vcopy(out[2], w)
            return K_ODD
    perms[0][:] = [0, 1, 2]
    perms[1][:] = [0, 2, 1]
    perms[2][:] = [1, 0, 2]
    perms[3][:] = [1, 2, 0]
    perms[4][:] = [2, 0, 1]
    perms[5][:] = [2, 1, 0]
    for pi in range(6):
        for c in range(8):
            e0 = -1 if (c >> 2) & 1 else 1
            e1 = -1 if (c >> 1) & 1 else 1
            e2 = -1 if c & 1 else 1
            for j in range(3):
                u[j] = e0 * b[perms[pi][0]][j]
                v[j] = e1 * b[perms[pi][1]][j]
                w[j] = e2 * b[perms[pi][2]][j]
            uv = qdot(m, 3, u, v)
            vw = qdot(m, 3, v, w)
            uw = qdot(m, 3, u, w)
            if vw >= uv and uv >= uw and uw >= 0.0:
                vcopy(out[0], u)
                vcopy(out[1], v)
                vcopy(out[2], w)
                return K_EVEN
    return -3


def lbr_bases(const double[:, ::1] mt, int d):
    """Per-node (kind, basis) for spacing-rescaled packed tensors."""
    cdef Py_ssize_t N = mt.shape[0], x
    kind_a = np.empty(N, np.uint8)
    basis_a = np.empty((N, d, d), np.int16)
    cdef uint8_t[::1] kind = kind_a
    cdef int16_t[:, :, ::1] basis = basis_a
    cdef long out[3][3]
    cdef int k, i, j
    cdef Py_ssize_t bad = -1
    cdef int code = 0
    with nogil:
        for x in range(N):
            k = mesh_basis(&mt[x, 0], d, out)
            if k < 0:
                bad = x
                code = k
                break
            kind[x] = <uint8_t>k
            for i in range(d):
                for j in range(d):
                    basis[x, i, j] = <int16_t>out[i][j]
    if bad >= 0:
        if code == -12 or code == -2:
            raise ValueError(f"tensor at node {bad} is not positive definite")
        raise ReductionError(f"lattice reduction failed at node {bad} (code {code})")
    return kind_a, basis_a


# --------------------------------------------------------------------------
# stencils on the grid


cdef struct Grid:
    int d
    int64_t dims[3]
    int64_t strides[3]


cdef void make_grid(Grid* g, const int64_t[::1] dims):
    cdef int k
    g.d = dims.shape[0]
    for k in range(3):
        g.dims[k] = dims[k] if k < g.d else 1
    g.strides[g.d - 1] = 1
    for k in range(g.d - 2, -1, -1):
        g.strides[k] = g.strides[k + 1] * g.dims[k + 1]


cdef inline void vertex_offset(const int8_t* coef, const int16_t* B, int d, int i, long* off) noexcept nogil:
    cdef int a, j
    for j in range(d):
        off[j] = 0
        for a in range(d):
            off[j] += <long>coef[i * 3 + a] * <long>B[a * d + j]


def clip_masks(const int64_t[::1] dims, const uint8_t[::1] kind, const int16_t[:, :, ::1] basis,
               const int32_t[::1] nv, const int32_t[::1] ns, const int8_t[:, :, ::1] coef,
               const uint8_t[:, :, ::1] simp):
    cdef Grid g
    make_grid(&g, dims)
    cdef int d = g.d
    cdef Py_ssize_t N = g.dims[0] * g.dims[1] * g.dims[2], x
    sm_a = np.zeros(N, np.uint64)
    vm_a = np.zeros(N, np.uint64)
    cdef uint64_t[::1] smask = sm_a
    cdef uint64_t[::1] vmask = vm_a
    cdef bint kshared = kind.shape[0] == 1, bshared = basis.shape[0] == 1
    cdef int k, i, j, s
    cdef long off[3]
    cdef int64_t c[3]
    cdef int64_t rem, p
    cdef uint64_t inside, sm, vm, bits
    with nogil:
        for x in range(N):
            rem = x
            for j in range(d - 1, -1, -1):
                c[j] = rem % g.dims[j]
                rem = rem // g.dims[j]
            k = kind[0 if kshared else x]
            inside = 0
            for i in range(nv[k]):
                vertex_offset(&coef[k, 0, 0], &basis[0 if bshared else x, 0, 0], d, i, off)
                bits = 1
                for j in range(d):
                    p = c[j] + off[j]
                    if p < 0 or p >= g.dims[j]:
                        bits = 0
                inside |= bits << i
            sm = 0
            vm = 0
            for s in range(ns[k]):
                bits = 1
                for j in range(d):
                    if not (inside >> simp[k, s, j]) & 1:
                        bits = 0
                if bits:
                    sm |= (<uint64_t>1) << s
                    for j in range(d):
                        vm |= (<uint64_t>1) << simp[k, s, j]
            smask[x] = sm
            vmask[x] = vm
    return sm_a, vm_a


def reverse_stencils(const int64_t[::1] dims, const uint8_t[::1] kind, const int16_t[:, :, ::1] basis,
                     const uint64_t[::1] vmask, const int32_t[::1] nv, const int8_t[:, :, ::1] coef):
    cdef Grid g
    make_grid(&g, dims)
    cdef int d = g.d
    cdef Py_ssize_t N = g.dims[0] * g.dims[1] * g.dims[2], x
    ptr_a = np.zeros(N + 1, np.int64)
    cdef int64_t[::1] ptr = ptr_a
    cdef bint kshared = kind.shape[0] == 1, bshared = basis.shape[0] == 1
    cdef int k, i, j
    cdef long off[3]
    cdef int64_t y
    with nogil:
        for x in range(N):
            k = kind[0 if kshared else x]
            for i in range(nv[k]):
                if (vmask[x] >> i) & 1:
                    vertex_offset(&coef[k, 0, 0], &basis[0 if bshared else x, 0, 0], d, i, off)
                    y = x
                    for j in range(d):
                        y += off[j] * g.strides[j]
                    ptr[y + 1] += 1
        for x in range(N):
            ptr[x + 1] += ptr[x]
    total = ptr[N]
    node_a = np.empty(total, np.int32)
    vidx_a = np.empty(total, np.uint8)
    fill_a = ptr_a[:-1].copy()
    cdef int32_t[::1] node = node_a
    cdef uint8_t[::1] vidx = vidx_a
    cdef int64_t[::1] fill = fill_a
    with nogil:
        for x in range(N):
            k = kind[0 if kshared else x]
            for i in range(nv[k]):
                if (vmask[x] >> i) & 1:
                    vertex_offset(&coef[k, 0, 0], &basis[0 if bshared else x, 0, 0], d, i, off)
                    y = x
                    for j in range(d):
                        y += off[j] * g.strides[j]
                    node[fill[y]] = <int32_t>x
                    vidx[fill[y]] = <uint8_t>i
                    fill[y] += 1
    return ptr_a, node_a, vidx_a


# --------------------------------------------------------------------------
# Hopf-Lax update (mirrors hopflax.interior_solve / node_update)


cdef struct Ctx:
    int d
    int64_t strides[3]
    const double* mt
    int P
    const uint8_t* kind
    bint kshared
    const int16_t* basis
    bint bshared
    const uint64_t* smask
    const uint64_t* vmask
    const int32_t* nv
    const int8_t* coef      # (K, VMAX, 3)
    const int32_t* nf
    const int32_t* facet    # (K, FMAX, 5)
    int fmax
    const int32_t* nvf      # (K, VMX)
    const int32_t* vfacet   # (K, VMX, FJMAX)
    int vmx


cdef struct Node:
    int kind
    uint64_t smask
    const double* m
    long off[VMAX][3]
    int64_t nodes[VMAX]


cdef inline void decode(const Ctx* c, int64_t x, Node* nd) noexcept nogil:
    cdef int k = c.kind[0 if c.kshared else x]
    cdef const int16_t* B = c.basis + (0 if c.bshared else x) * c.d * c.d
    cdef int i, j
    cdef uint64_t vm = c.vmask[x]
    cdef int64_t y
    nd.kind = k
    nd.smask = c.smask[x]
    nd.m = c.mt + x * c.P
    for i in range(c.nv[k]):
        vertex_offset(c.coef + k * VMAX * 3, B, c.d, i, nd.off[i])
        if (vm >> i) & 1:
            y = x
            for j in range(c.d):
                y += nd.off[i][j] * c.strides[j]
            nd.nodes[i] = y
        else:
            nd.nodes[i] = -1


cdef inline bint interior(double* g, const double* delta, int k, double* value, double* w) noexcept nogil:
    """g is a row-major k x k Gram matrix; writes value and normalised weights"""
    cdef double adj[9]
    cdef double det, mx, a, b, cc, disc, t, ri, si, s, total
    cdef double dp[3]
    cdef int i, j
    if k == 1:
        value[0] = delta[0] + sqrt(g[0])
        w[0] = 1.0
        return True
    if k == 2:
        det = g[0] * g[3] - g[1] * g[1]
        adj[0] = g[3]
        adj[1] = -g[1]
        adj[2] = -g[1]
        adj[3] = g[0]
    else:
        adj[0] = g[4] * g[8] - g[5] * g[5]
        adj[1] = g[2] * g[5] - g[1] * g[8]
        adj[2] = g[1] * g[5] - g[2] * g[4]
        adj[4] = g[0] * g[8] - g[2] * g[2]
        adj[5] = g[1] * g[2] - g[0] * g[5]
        adj[8] = g[0] * g[4] - g[1] * g[1]
        adj[3] = adj[1]
        adj[6] = adj[2]
        adj[7] = adj[5]
        det = g[0] * adj[0] + g[1] * adj[1] + g[2] * adj[2]
    mx = delta[0]
    for i in range(1, k):
        if delta[i] > mx:
            mx = delta[i]
    for i in range(k):
        dp[i] = delta[i] - mx
    a = 0.0
    b = 0.0
    cc = 0.0
    for i in range(k):
        ri = 0.0
        si = 0.0
        for j in range(k):
            ri += adj[i * k + j]
            si += adj[i * k + j] * dp[j]
        a += ri
        b += si
        cc += dp[i] * si
    cc -= det
    disc = b * b - a * cc
    if disc < 0.0:
        if disc < -1e-14 * (b * b + fabs(a * cc)):
            return False
        disc = 0.0
    # the smaller root never normalises to positive weights; t < 0 is fine
    # since interpolated values may undercut the largest vertex value
    t = (b + sqrt(disc)) / a
    total = 0.0
    for i in range(k):
        s = 0.0
        for j in range(k):
            s += adj[i * k + j] * (t - dp[j])
        if not s > 0.0:
            return False
        w[i] = s
        total += s
    for i in range(k):
        w[i] = w[i] / total
    value[0] = mx + t
    return True


cdef inline bint facet_value(const Ctx* c, const Node* nd, const int32_t* f, const double* values,
                             double* value, double* w) noexcept nogil:
    cdef int k = f[1], i, j
    cdef double delta[3]
    cdef double g[9]
    for i in range(k):
        delta[i] = values[nd.nodes[f[2 + i]]]
    for i in range(k):
        for j in range(i, k):
            g[i * k + j] = qdot(nd.m, c.d, nd.off[f[2 + i]], nd.off[f[2 + j]])
            g[j * k + i] = g[i * k + j]
    return interior(g, delta, k, value, w)


cdef double update_all(const Ctx* c, const Node* nd, const double* values, int* arg, double* warg) noexcept nogil:
    """unfiltered operator; arg receives the facet index (-1 if none)"""
    cdef int f, i, ok
    cdef const int32_t* fp
    cdef double best = INFINITY, val
    cdef double w[3]
    arg[0] = -1
    for f in range(c.nf[nd.kind]):
        fp = c.facet + (nd.kind * c.fmax + f) * 5
        if not (nd.smask >> fp[0]) & 1:
            continue
        ok = 1
        for i in range(fp[1]):
            if not values[nd.nodes[fp[2 + i]]] < INFINITY:
                ok = 0
                break
        if not ok:
            continue
        if facet_value(c, nd, fp, values, &val, w) and val < best:
            best = val
            arg[0] = f
            for i in range(fp[1]):
                warg[i] = w[i]
    return best


cdef double update_filtered(const Ctx* c, const Node* nd, const double* values, const uint8_t* accepted,
                            int j) noexcept nogil:
    cdef int q, f, i, ok
    cdef const int32_t* fp
    cdef double best = INFINITY, val
    cdef double w[3]
    cdef int base = nd.kind * c.vmx + j
    for q in range(c.nvf[base]):
        f = c.vfacet[base * FJMAX + q]
        fp = c.facet + (nd.kind * c.fmax + f) * 5
        if not (nd.smask >> fp[0]) & 1:
            continue
        ok = 1
        for i in range(fp[1]):
            if not accepted[nd.nodes[fp[2 + i]]]:
                ok = 0
                break
        if not ok:
            continue
        for i in range(fp[1]):
            if not values[nd.nodes[fp[2 + i]]] < INFINITY:
                ok = 0
                break
        if not ok:
            continue
        if facet_value(c, nd, fp, values, &val, w) and val < best:
            best = val
    return best


cdef void make_ctx(Ctx* c, st, list keep) except *:
    cdef const double[:, ::1] mt = st.mt
    cdef const uint8_t[::1] kind = st.kind
    cdef const int16_t[:, :, ::1] basis = st.basis
    cdef const uint64_t[::1] smask = st.smask
    cdef const uint64_t[::1] vmask = st.vmask
    cdef const int32_t[::1] nv = KIND_NV
    cdef const int8_t[:, :, ::1] coef = KIND_COEF
    cdef const int32_t[::1] nf = KIND_NF
    cdef const int32_t[:, :, ::1] facet = KIND_FACET
    cdef const int32_t[:, ::1] nvf = KIND_NVF
    cdef const int32_t[:, :, ::1] vfacet = KIND_VFACET
    keep.extend([mt, kind, basis, smask, vmask, nv, coef, nf, facet, nvf, vfacet])
    cdef int k
    c.d = len(st.dims)
    acc = 1
    for k in range(c.d - 1, -1, -1):
        c.strides[k] = acc
        acc *= st.dims[k]
    c.mt = &mt[0, 0]
    c.P = mt.shape[1]
    c.kind = &kind[0]
    c.kshared = kind.shape[0] == 1
    c.basis = &basis[0, 0, 0]
    c.bshared = basis.shape[0] == 1
    c.smask = &smask[0]
    c.vmask = &vmask[0]
    c.nv = &nv[0]
    c.coef = &coef[0, 0, 0]
    c.nf = &nf[0]
    c.facet = &facet[0, 0, 0]
    c.fmax = facet.shape[1]
    c.nvf = &nvf[0, 0]
    c.vfacet = &vfacet[0, 0, 0]
    c.vmx = nvf.shape[1]
    if vfacet.shape[2] != FJMAX:
        raise ValueError("facet table width mismatch")


# --------------------------------------------------------------------------
# binary heap keyed by (value, node)


cdef struct Heap:
    double* key
    int64_t* node
    int64_t n
    int64_t cap


cdef inline bint hless(double a, int64_t i, double b, int64_t j) noexcept nogil:
    return a < b or (a == b and i < j)


cdef int heap_push(Heap* h, double key, int64_t node) noexcept nogil:
    cdef int64_t i, p
    cdef double* nk
    cdef int64_t* nn
    if h.n == h.cap:
        h.cap = h.cap * 2 + 16
        nk = <double*>realloc(h.key, h.cap * sizeof(double))
        nn = <int64_t*>realloc(h.node, h.cap * sizeof(int64_t))
        if nk == NULL or nn == NULL:
            return -1
        h.key = nk
        h.node = nn
    i = h.n
    h.n += 1
    while i > 0:
        p = (i - 1) // 2
        if hless(key, node, h.key[p], h.node[p]):
            h.key[i] = h.key[p]
            h.node[i] = h.node[p]
            i = p
        else:
            break
    h.key[i] = key
    h.node[i] = node
    return 0


cdef inline void heap_pop(Heap* h, double* key, int64_t* node) noexcept nogil:
    cdef int64_t i = 0, c
    cdef double lk
    cdef int64_t ln
    key[0] = h.key[0]
    node[0] = h.node[0]
    h.n -= 1
    if h.n == 0:
        return
    lk = h.key[h.n]
    ln = h.node[h.n]
    while True:
        c = 2 * i + 1
        if c >= h.n:
            break
        if c + 1 < h.n and hless(h.key[c + 1], h.node[c + 1], h.key[c], h.node[c]):
            c += 1
        if hless(h.key[c], h.node[c], lk, ln):
            h.key[i] = h.key[c]
            h.node[i] = h.node[c]
            i = c
        else:
            break
    h.key[i] = lk
    h.node[i] = ln


# --------------------------------------------------------------------------
# solvers


def fast_march(st, seed_nodes, seed_vals, bint debug=False):
    cdef Ctx c
    keep = []
    make_ctx(&c, st, keep)
    cdef Py_ssize_t N = st.size
    val_a = np.full(N, np.inf)
    acc_a = np.zeros(N, np.uint8)
    fix_a = np.zeros(N, np.uint8)
    order_a = np.empty(N, np.int64)
    cdef double[::1] values = val_a
    cdef uint8_t[::1] accepted = acc_a
    cdef uint8_t[::1] fixed = fix_a
    cdef int64_t[::1] order = order_a
    cdef const int64_t[::1] rev_ptr = st.rev_ptr
    cdef const int32_t[::1] rev_node = st.rev_node
    cdef const uint8_t[::1] rev_vidx = st.rev_vidx
    cdef Heap h
    h.key = NULL
    h.node = NULL
    h.n = 0
    h.cap = 0
    for s, v in zip(seed_nodes, seed_vals):
        values[int(s)] = float(v)
        fixed[int(s)] = 1
    cdef int64_t pushes = 0, pops = 0, updates = 0, nacc = 0, y, x, p
    cdef int err = 0
    for s in sorted(set(int(s) for s in seed_nodes)):
        if heap_push(&h, values[s], s) != 0:
            err = 1
        pushes += 1
    cdef double v_y, last = -INFINITY, val
    cdef Node nd
    with nogil:
        while h.n > 0 and err == 0:
            heap_pop(&h, &v_y, &y)
            pops += 1
            if accepted[y]:
                continue
            accepted[y] = 1
            order[nacc] = y
            nacc += 1
            if debug and v_y < last:
                err = 2
                break
            last = v_y
            for p in range(rev_ptr[y], rev_ptr[y + 1]):
                x = rev_node[p]
                if accepted[x] or fixed[x]:
                    continue
                decode(&c, x, &nd)
                val = update_filtered(&c, &nd, &values[0], &accepted[0], rev_vidx[p])
                updates += 1
                if val < values[x]:
                    values[x] = val
                    if heap_push(&h, val, x) != 0:
                        err = 1
                        break
                    pushes += 1
    free(h.key)
    free(h.node)
    if err == 1:
        raise MemoryError("heap allocation failed")
    if err == 2:
        raise AssertionError("acceptance order not monotone")
    return val_a, order_a[:nacc].copy(), pushes, pops, updates


def agsi(st, seed_nodes, seed_vals, double tol, int64_t max_updates):
    cdef Ctx c
    keep = []
    make_ctx(&c, st, keep)
    cdef Py_ssize_t N = st.size
    val_a = np.full(N, np.inf)
    fix_a = np.zeros(N, np.uint8)
    inq_a = np.zeros(N, np.uint8)
    qkey_a = np.zeros(N)
    cdef double[::1] values = val_a
    cdef uint8_t[::1] fixed = fix_a
    cdef uint8_t[::1] inq = inq_a
    cdef double[::1] qkey = qkey_a
    cdef const int64_t[::1] rev_ptr = st.rev_ptr
    cdef const int32_t[::1] rev_node = st.rev_node
    cdef Heap h
    h.key = NULL
    h.node = NULL
    h.n = 0
    h.cap = 0
    for s, v in zip(seed_nodes, seed_vals):
        values[int(s)] = float(v)
        fixed[int(s)] = 1
    cdef int64_t pushes = 0, pops = 0, updates = 0, x, wn, p
    cdef int err = 0
    for s in sorted(set(int(s) for s in seed_nodes)):
        if heap_push(&h, values[s], s) != 0:
            err = 1
        inq[s] = 1
        qkey[s] = values[s]
        pushes += 1
    cdef double key, cand
    cdef int arg
    cdef double warg[3]
    cdef Node nd
    with nogil:
        while h.n > 0 and err == 0:
            heap_pop(&h, &key, &x)
            pops += 1
            if not inq[x] or qkey[x] != key:
                continue
            inq[x] = 0
            for p in range(rev_ptr[x], rev_ptr[x + 1]):
                wn = rev_node[p]
                if fixed[wn]:
                    continue
                decode(&c, wn, &nd)
                cand = update_all(&c, &nd, &values[0], &arg, warg)
                updates += 1
                if updates > max_updates:
                    err = 3
                    break
                if cand < values[wn] - tol:
                    # commit now so later neighbours see it; the queue entry propagates it
                    values[wn] = cand
                    inq[wn] = 1
                    qkey[wn] = cand
                    if heap_push(&h, cand, wn) != 0:
                        err = 1
                        break
                    pushes += 1
    free(h.key)
    free(h.node)
    if err == 1:
        raise MemoryError("heap allocation failed")
    if err == 3:
        raise RuntimeError(f"AGSI exceeded {max_updates} updates without converging")
    return val_a, pushes, pops, updates


def hopf_lax_all(st, values_in):
    cdef Ctx c
    keep = []
    make_ctx(&c, st, keep)
    cdef const double[::1] values = np.ascontiguousarray(values_in, dtype=np.float64)
    cdef Py_ssize_t N = st.size, x
    out_a = np.empty(N)
    cdef double[::1] out = out_a
    cdef Node nd
    cdef int arg
    cdef double warg[3]
    with nogil:
        for x in range(N):
            decode(&c, x, &nd)
            out[x] = update_all(&c, &nd, &values[0], &arg, warg)
    return out_a


def hopf_lax_argmin(st, values_in, int64_t x):
    cdef Ctx c
    keep = []
    make_ctx(&c, st, keep)
    cdef const double[::1] values = np.ascontiguousarray(values_in, dtype=np.float64)
    cdef Node nd
    cdef int arg, i
    cdef double warg[3]
    decode(&c, x, &nd)
    cdef double val = update_all(&c, &nd, &values[0], &arg, warg)
    if arg < 0:
        return val, -1, (), ()
    fp = KIND_FACET[nd.kind, arg]
    k = int(fp[1])
    return val, int(fp[0]), tuple(int(fp[2 + i]) for i in range(k)), tuple(warg[i] for i in range(k))
