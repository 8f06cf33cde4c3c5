"""Reference computations that share no code with the package.

Everything here is plain numpy: brute-force lattice enumeration, golden
section minimisation over segments, and Jacobi sweeps run to convergence.
"""

import itertools
import math

import numpy as np
from scipy.stats import special_ortho_group

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

RING4 = [(1, 0), (0, 1), (-1, 0), (0, -1)]
RING6 = [(1, 0), (1, 1), (0, 1), (-1, 0), (-1, -1), (0, -1)]
RING8 = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]


def random_spd(rng, dim, kappa):
    """SPD matrix with condition number kappa**2 (so anisotropy ratio kappa), random orientation."""
    R = special_ortho_group.rvs(dim, random_state=rng)
    ev = np.exp(rng.uniform(0.0, 2.0 * math.log(kappa), size=dim))
    ev[0] = 1.0
    ev[-1] = kappa**2
    rng.shuffle(ev)
    return R @ np.diag(ev) @ R.T


def packed(m):
    d = m.shape[0]
    return tuple(float(m[i, j]) for i in range(d) for j in range(i, d))


def rotated_metric(kappa, angle):
    """Eigenvalue 1 along (cos, sin) of angle, kappa**2 across."""
    c, s = math.cos(angle), math.sin(angle)
    R = np.array([[c, -s], [s, c]])
    return R @ np.diag([1.0, kappa**2]) @ R.T


def successive_minima(m, box):
    """Norms of the successive minima of Z^d under m, by enumeration of |z|_inf <= box."""
    d = m.shape[0]
    pts = np.array([z for z in itertools.product(range(-box, box + 1), repeat=d) if any(z)])
    q = np.einsum("ni,ij,nj->n", pts, m, pts)
    order = np.argsort(q, kind="stable")
    chosen = []
    for k in order:
        cand = chosen + [pts[k]]
        if np.linalg.matrix_rank(np.array(cand, dtype=float)) == len(cand):
            chosen = cand
            if len(chosen) == d:
                break
    return sorted(math.sqrt(float(z @ m @ z)) for z in chosen)


def segment_min(m, a, b, da, db, iters=80):
    """min over s in [0,1] of ||(1-s)a + s b||_m + (1-s)da + s db (vectorised, golden section).

    m: (n, 2, 2), a, b: (2,), da, db: (n,).
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)

    def f(s):
        p = np.outer(1 - s, a) + np.outer(s, b)
        return np.sqrt(np.einsum("ni,nij,nj->n", p, m, p)) + (1 - s) * da + s * db

    lo = np.zeros_like(da)
    hi = np.ones_like(da)
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        left = f1 < f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        x2n = np.where(left, x1, lo + GOLDEN * (hi - lo))
        x1n = np.where(left, hi - GOLDEN * (hi - lo), x2)
        x1, x2 = x1n, x2n
        f1, f2 = f(x1), f(x2)
    best = np.minimum(f1, f2)
    return np.minimum(best, np.minimum(f(np.zeros_like(da)), f(np.ones_like(da))))


def hopf_lax_2d(values, tensors, ring):
    """Unfiltered Hopf-Lax operator on a square grid with unit spacing and a fixed ring stencil.

    ``values`` (nx, ny), ``tensors`` (nx, ny, 2, 2) already scaled to index units.
    Segments with a vertex outside the grid are dropped; +inf endpoints are skipped.
    """
    nx, ny = values.shape
    out = np.full(values.shape, np.inf)
    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    m = tensors.reshape(-1, 2, 2)
    for k in range(len(ring)):
        a, b = ring[k], ring[(k + 1) % len(ring)]
        ia, ja = I + a[0], J + a[1]
        ib, jb = I + b[0], J + b[1]
        ok = (ia >= 0) & (ia < nx) & (ja >= 0) & (ja < ny) & (ib >= 0) & (ib < nx) & (jb >= 0) & (jb < ny)
        da = np.full(values.shape, np.inf)
        db = np.full(values.shape, np.inf)
        da[ok] = values[ia[ok], ja[ok]]
        db[ok] = values[ib[ok], jb[ok]]
        da, db = da.ravel(), db.ravel()
        both = np.isfinite(da) & np.isfinite(db)
        res = np.full(da.shape, np.inf)
        if both.any():
            res[both] = segment_min(m[both], a, b, da[both], db[both])
        # single endpoints
        for v, dv in ((a, da), (b, db)):
            fin = np.isfinite(dv)
            nv = np.sqrt(np.einsum("i,nij,j->n", np.asarray(v, float), m[fin], np.asarray(v, float)))
            res[fin] = np.minimum(res[fin], dv[fin] + nv)
        out = np.minimum(out, res.reshape(values.shape))
    return out


def fixed_point_2d(tensors, seeds, ring, tol=1e-13, max_iter=100000):
    """Jacobi iteration of the Hopf-Lax operator from +inf to convergence; seeds are fixed."""
    nx, ny = tensors.shape[:2]
    v = np.full((nx, ny), np.inf)
    for (i, j), val in seeds.items():
        v[i, j] = val
    for _ in range(max_iter):
        new = np.minimum(v, hopf_lax_2d(v, tensors, ring))
        for (i, j), val in seeds.items():
            new[i, j] = val
        both = np.isfinite(new) & np.isfinite(v)
        change = float(np.max(np.abs(new[both] - v[both]), initial=0.0))
        newly = np.count_nonzero(np.isfinite(new) & ~np.isfinite(v))
        v = new
        if newly == 0 and change <= tol:
            return v
    raise RuntimeError("oracle iteration did not converge")


def tensor_grid(m, nx, ny, h=1.0):
    """Constant tensor scaled to index units, as an (nx, ny, 2, 2) array."""
    return np.broadcast_to(np.asarray(m) * h * h, (nx, ny, 2, 2)).copy()


def exact_constant_distance(m, points, source):
    d = np.asarray(points, float) - np.asarray(source, float)
    return np.sqrt(np.einsum("ni,ij,nj->n", d, m, d))


def boundary_sample_min(m, verts, simplices, values, samples=10000):
    """min over sampled boundary points of a 2D fan (segments) of ||p||_m + linear interpolation."""
    best = math.inf
    per = max(2, samples // max(1, len(simplices)))
    s = np.linspace(0.0, 1.0, per)
    for a, b in simplices:
        if not (math.isfinite(values[a]) and math.isfinite(values[b])):
            continue
        p = np.outer(1 - s, verts[a]) + np.outer(s, verts[b])
        f = np.sqrt(np.einsum("ni,ij,nj->n", p, m, p)) + (1 - s) * values[a] + s * values[b]
        best = min(best, float(f.min()))
    return best


def facet_sample_min(gram, delta, samples=200001):
    """Sampling oracle for one facet given its Gram matrix: k = 1, 2 dense grid; k = 3 lattice of the triangle."""
    g = np.asarray(gram, float)
    dl = np.asarray(delta, float)
    k = len(dl)
    if k == 1:
        return float(dl[0] + math.sqrt(g[0, 0]))
    if k == 2:
        s = np.linspace(0.0, 1.0, samples)
        w = np.stack([1 - s, s], -1)
    else:
        n = int(math.sqrt(2 * samples))
        a, b = np.meshgrid(np.linspace(0, 1, n), np.linspace(0, 1, n), indexing="ij")
        keep = a + b <= 1
        w = np.stack([a[keep], b[keep], 1 - a[keep] - b[keep]], -1)
    f = np.sqrt(np.maximum(np.einsum("ni,ij,nj->n", w, g, w), 0.0)) + w @ dl
    return float(f.min())


def _golden(f, lo, hi, iters=90):
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = f(x2)
    return min(f1, f2, f(lo), f(hi))


def triangle_min(gram, delta):
    """min over the 2-simplex of sqrt(w^T G w) + w.delta by nested golden section (the objective is convex)."""
    g = [[float(x) for x in r] for r in np.asarray(gram, float)]
    d = [float(x) for x in delta]

    def f(a, b):
        w = (a, b, 1.0 - a - b)
        q = sum(w[i] * g[i][j] * w[j] for i in range(3) for j in range(3))
        return math.sqrt(max(q, 0.0)) + sum(wi * di for wi, di in zip(w, d))

    return _golden(lambda a: _golden(lambda b: f(a, b), 0.0, 1.0 - a, 60), 0.0, 1.0, 60)
