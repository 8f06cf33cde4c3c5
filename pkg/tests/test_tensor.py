import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fmlbr.tensor import (NotPositiveDefinite, SpdTensor, anisotropy_ratio, eigvalsh, multiplicative_distance,
                          norm, packed_index, rescale_by_spacing)

from oracles import packed, random_spd


def test_norm_examples():
    assert norm(SpdTensor.identity(2), (3, 4)) == 5.0
    assert norm(SpdTensor.diag(4, 9), (1, 1)) == pytest.approx(math.sqrt(13), abs=1e-15)
    assert norm(SpdTensor(2, (1.0, 0.9, 1.0)), (1, -1)) == pytest.approx(math.sqrt(0.2), rel=1e-14)


def test_norm_dimension_mismatch():
    with pytest.raises(ValueError):
        norm(SpdTensor.identity(2), (1, 2, 3))


def test_not_positive_definite():
    with pytest.raises(NotPositiveDefinite):
        SpdTensor(2, (1.0, 2.0, 1.0))
    with pytest.raises(ValueError):
        SpdTensor(2, (1.0, 0.0))


def test_anisotropy_examples():
    assert anisotropy_ratio(SpdTensor.identity(3)) == 1.0
    assert anisotropy_ratio(SpdTensor.diag(0.8, 0.2)) == pytest.approx(2.0, rel=1e-14)
    band = SpdTensor.diag(1.0, 1e-4)
    assert anisotropy_ratio(band) == pytest.approx(100.0, rel=1e-12)


def test_multiplicative_distance_examples():
    M = SpdTensor(2, (2.0, 0.3, 1.0))
    assert multiplicative_distance(M, M) == pytest.approx(0.0, abs=1e-14)
    assert multiplicative_distance(M, M.scaled(4.0)) == pytest.approx(math.log(2), rel=1e-12)
    assert multiplicative_distance(SpdTensor.diag(1, 4), SpdTensor.identity(2)) == pytest.approx(math.log(2), rel=1e-12)


def test_rescale_examples():
    assert rescale_by_spacing(SpdTensor.identity(2), (1, 1)) == SpdTensor.identity(2)
    assert rescale_by_spacing(SpdTensor.identity(2), (2, 3)).entries == SpdTensor.diag(4, 9).entries


def test_packed_layout():
    m = np.array([[1.0, 2, 3], [2, 5, 6], [3, 6, 9]])
    vals = packed(m)
    for i in range(3):
        for j in range(3):
            assert vals[packed_index(i, j, 3)] == m[i, j]


spd_params = st.tuples(st.integers(2, 3), st.floats(1.0, 100.0), st.integers(0, 2**31 - 1))


@given(spd_params)
def test_eigvalsh_matches_numpy(p):
    d, kappa, seed = p
    m = random_spd(np.random.default_rng(seed), d, kappa)
    ours = sorted(eigvalsh(SpdTensor(d, packed(m))))
    ref = np.linalg.eigvalsh(m)
    assert np.allclose(ours, ref, rtol=1e-9, atol=1e-12 * ref.max())


@given(spd_params, st.floats(0.1, 10.0))
def test_anisotropy_scale_invariant(p, c):
    d, kappa, seed = p
    M = SpdTensor(d, packed(random_spd(np.random.default_rng(seed), d, kappa)))
    assert anisotropy_ratio(M.scaled(c)) == pytest.approx(anisotropy_ratio(M), rel=1e-9)
    assert anisotropy_ratio(rescale_by_spacing(M, (c,) * d)) == pytest.approx(anisotropy_ratio(M), rel=1e-9)


@given(spd_params, st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.floats(-4, 4))
def test_norm_homogeneous(p, u, t):
    d, kappa, seed = p
    M = SpdTensor(d, packed(random_spd(np.random.default_rng(seed), d, kappa)))
    u = u[:d]
    assert norm(M, [t * x for x in u]) == pytest.approx(abs(t) * norm(M, u), rel=1e-12, abs=1e-12)


@given(spd_params, spd_params)
def test_multiplicative_distance_symmetric_and_bounds_norm_ratio(p, q):
    rng = np.random.default_rng(p[2])
    d = p[0]
    A = SpdTensor(d, packed(random_spd(rng, d, p[1])))
    B = SpdTensor(d, packed(random_spd(np.random.default_rng(q[2]), d, q[1])))
    dist = multiplicative_distance(A, B)
    assert dist == pytest.approx(multiplicative_distance(B, A), rel=1e-8, abs=1e-10)
    for _ in range(20):
        u = rng.normal(size=d)
        assert abs(math.log(norm(A, u) / norm(B, u))) <= dist * (1 + 1e-8) + 1e-10
