import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fmlbr.grid import MetricGrid
from fmlbr.stencil import (
    Kind,
    build_grid_stencils,
    build_reduced_mesh,
    classical_mesh,
    mesh_anisotropy_bound,
    reduced_mesh_kind,
    validate_mesh,
)
from fmlbr.tensor import SpdTensor, anisotropy_ratio

from oracles import packed, random_spd, rotated_metric

SQ = ((-0.5, 0.5), (-0.5, 0.5))


def _spd(dim, seed, kappa):
    return SpdTensor(dim, packed(random_spd(np.random.default_rng(seed), dim, kappa)))


def test_identity_2d_mesh():
    T = build_reduced_mesh(SpdTensor.identity(2))
    assert len(T) == 6
    assert sorted(T.vertices) == sorted([(1, 0), (-1, 0), (0, 1), (0, -1), (-1, 1), (1, -1)])
    assert validate_mesh(SpdTensor.identity(2), T).ok


def test_one_dimensional_mesh():
    T = build_reduced_mesh(SpdTensor(1, (3.0,)))
    assert sorted(T.simplices) == [((-1,),), ((1,),)]


@pytest.mark.parametrize("seed", range(8))
def test_counts_2d_3d(seed):
    M2 = _spd(2, seed, 20.0)
    M3 = _spd(3, seed, 20.0)
    T2, T3 = build_reduced_mesh(M2), build_reduced_mesh(M3)
    assert (len(T2), len(T2.vertices)) == (6, 6)
    assert (len(T3), len(T3.vertices)) == (24, 14)


def test_block_diagonal_joins_planar_and_axial_meshes():
    M2 = rotated_metric(4.0, 0.4)
    M = SpdTensor.from_matrix(np.block([[M2, np.zeros((2, 1))], [np.zeros((1, 2)), np.array([[2.0]])]]))
    kind, _ = reduced_mesh_kind(M)
    assert kind == Kind.BLOCK21
    tri = {frozenset(s) for s in build_reduced_mesh(SpdTensor(2, packed(M2))).simplices}
    T = build_reduced_mesh(M)
    assert validate_mesh(M, T).ok
    # every tetrahedron joins a triangle of the planar mesh with a segment of the 1D mesh
    seen = set()
    for s in T.simplices:
        planar = frozenset(v[:2] for v in s if v[2] == 0)
        vertical = [v[2] for v in s if v[:2] == (0, 0)]
        assert planar in tri and len(vertical) == 1 and vertical[0] in (1, -1)
        seen.add((planar, vertical[0]))
    assert len(seen) == len(T) == 2 * len(tri)


def test_diagonal_canonical_mesh_passes():
    assert validate_mesh(SpdTensor.diag(2, 5), classical_mesh("fm4")).ok


def test_rotated_canonical_mesh_fails_acuteness():
    M = SpdTensor(2, packed(rotated_metric(5.0, math.pi / 6)))
    rep = validate_mesh(M, classical_mesh("fm4"))
    assert rep.covers and rep.unimodular and not rep.acute
    # the offending pair, exhibited directly
    assert min(M.dot(a, b) for s in classical_mesh("fm4").simplices for a, b in itertools.combinations(s, 2)) < 0


@given(st.integers(0, 10**6), st.floats(0.0, math.log(100.0)), st.sampled_from([2, 3]))
def test_reduced_mesh_always_valid(seed, logk, dim):
    M = _spd(dim, seed, math.exp(logk))
    T = build_reduced_mesh(M)
    assert validate_mesh(M, T, n_directions=300, seed=seed).ok


@given(st.integers(0, 10**6), st.floats(0.0, math.log(100.0)), st.sampled_from([2, 3]))
def test_point_symmetry_and_vertex_norms(seed, logk, dim):
    M = _spd(dim, seed, math.exp(logk))
    T = build_reduced_mesh(M)
    vs = set(T.vertices)
    assert all(tuple(-a for a in v) in vs for v in vs)
    kappa = anisotropy_ratio(M)
    assert max(M.quad(v) for v in vs) ** 0.5 <= dim * kappa * (1 + 1e-12)


def test_classical_bounds_2d():
    assert mesh_anisotropy_bound(classical_mesh("fm4"))[1] == 1.0
    assert mesh_anisotropy_bound(classical_mesh("fm8"))[1] == pytest.approx(1 + math.sqrt(2), rel=1e-15)
    assert mesh_anisotropy_bound(classical_mesh("fm6"))[1] == 1.0


def test_fm26_bound():
    # lowest cosine within a tetrahedron of the 26-point fan
    assert mesh_anisotropy_bound(classical_mesh("fm26"))[1] == pytest.approx((math.sqrt(3) + 1) / 2, rel=1e-14)


@pytest.mark.parametrize("name", ["fm4", "fm8", "fm6", "fm26", "tri2", "kuhn3"])
def test_classical_meshes_cover(name):
    T = classical_mesh(name)
    rep = validate_mesh(SpdTensor.identity(T.dim), T)
    assert rep.covers and rep.unimodular


@pytest.mark.parametrize("name,dim", [("fm8", 2), ("fm26", 3)])
def test_fixed_mesh_valid_at_its_bound(name, dim, rng):
    T = classical_mesh(name)
    _, kappa = mesh_anisotropy_bound(T)
    for _ in range(30):
        M = SpdTensor(dim, packed(random_spd(rng, dim, kappa * (1 - 1e-9))))
        assert validate_mesh(M, T, n_directions=200).acute


def test_diagonal_grid_uses_axis_stencil():
    metric = MetricGrid.constant(SpdTensor.diag(1.0, 7.0), (9, 9), SQ)
    gs = build_grid_stencils(metric)
    x = 4 * 9 + 4
    assert gs.direct_counts()[x] == 4
    assert sorted(map(tuple, gs.vertex_offsets(x).tolist())) == [(-1, 0), (0, -1), (0, 1), (1, 0)]


def test_generic_grid_counts_and_transpose():
    metric = MetricGrid.constant(SpdTensor(2, packed(rotated_metric(6.0, 0.5))), (17, 13), SQ)
    gs = build_grid_stencils(metric)
    direct = gs.direct_counts()
    c = np.ravel_multi_index((8, 6), metric.dims)
    # a generic reduced mesh may reach beyond the first ring; pick a node well inside
    assert direct[c] == 6
    assert direct.sum() == gs.reversed_counts().sum()
    pairs_direct = {(x, y) for x in range(metric.size) for y in gs.direct_vertices(x)}
    pairs_rev = {(int(x), y) for y in range(metric.size) for x in gs.reversed(y)}
    assert pairs_direct == pairs_rev
    assert all(x != y for x, y in pairs_direct)


def test_corner_clipping():
    metric = MetricGrid.constant(SpdTensor(2, packed(rotated_metric(3.0, 0.3))), (9, 9), SQ)
    gs = build_grid_stencils(metric)
    c = np.ravel_multi_index((4, 4), metric.dims)
    assert len(gs.direct(0)) < len(gs.direct(c)) == 6


def test_fixed_stencil_dimension_mismatch():
    metric = MetricGrid.constant(SpdTensor.identity(2), (5, 5), SQ)
    with pytest.raises(ValueError):
        build_grid_stencils(metric, "fm26")
