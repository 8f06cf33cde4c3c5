import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fmlbr.lbr import oracle_reduced_norms, reduce_basis, round_half_to_zero
from fmlbr.tensor import SpdTensor, anisotropy_ratio

from oracles import packed, random_spd, successive_minima


def test_identity_is_reduced():
    b = reduce_basis(SpdTensor.identity(2))
    assert b.norms(SpdTensor.identity(2)) == (1.0, 1.0)
    assert sorted(map(tuple, (map(abs, u) for u in b.vectors))) == [(0, 1), (1, 0)]


def test_diagonal_sorts_axes():
    M = SpdTensor.diag(9, 1)
    b = reduce_basis(M)
    assert [tuple(map(abs, u)) for u in b.vectors] == [(0, 1), (1, 0)]
    assert b.norms(M) == (1.0, 3.0)


def test_strong_correlation_short_vector():
    M = SpdTensor(2, (1.0, 0.9, 1.0))
    b = reduce_basis(M)
    assert tuple(map(abs, b.vectors[0])) == (1, 1) and b.vectors[0][0] * b.vectors[0][1] == -1
    assert M.quad(b.vectors[0]) == pytest.approx(0.2, rel=1e-12)


def test_oracle_examples():
    assert oracle_reduced_norms(SpdTensor.identity(3)) == [1.0, 1.0, 1.0]
    assert oracle_reduced_norms(SpdTensor.diag(1, 4, 9)) == [1.0, 2.0, 3.0]


def test_oracle_refuses_huge_kappa():
    with pytest.raises(ValueError):
        oracle_reduced_norms(SpdTensor.diag(1, 1e8), kappa_max=1e3)


def test_one_dimensional():
    b = reduce_basis(SpdTensor(1, (4.0,)))
    assert b.vectors == ((1,),)


def test_round_half_to_zero():
    assert [round_half_to_zero(x) for x in (0.5, -0.5, 1.5, -1.5, 0.51, -2.49)] == [0, 0, 1, -1, 1, -2]


def test_seeded_3d_matches_enumeration():
    rng = np.random.default_rng(7)
    for _ in range(20):
        m = random_spd(rng, 3, float(np.exp(rng.uniform(0, math.log(30)))))
        M = SpdTensor(3, packed(m))
        box = int(math.ceil(anisotropy_ratio(M)))
        ours = sorted(reduce_basis(M).norms(M))
        assert np.allclose(ours, successive_minima(m, box), rtol=1e-10)


params = st.tuples(st.integers(2, 3), st.floats(1.0, 100.0), st.integers(0, 2**31 - 1))


@given(params)
def test_reduced_basis_properties(p):
    d, kappa, seed = p
    m = random_spd(np.random.default_rng(seed), d, kappa)
    M = SpdTensor(d, packed(m))
    b = reduce_basis(M)
    U = np.array(b.vectors)
    assert abs(round(np.linalg.det(U))) == 1
    norms = b.norms(M)
    assert list(norms) == sorted(norms)
    k = anisotropy_ratio(M)
    for u, nu in zip(b.vectors, norms):
        assert np.linalg.norm(u) <= k * (1 + 1e-9)
        assert nu <= k * norms[0] * (1 + 1e-9)
    # 2 |u_i^T M z| <= ||z||^2 for signed sums of the other vectors
    for i, u in enumerate(U):
        others = [U[j] for j in range(d) if j != i]
        for coefs in np.array(np.meshgrid(*[[-2, -1, 1, 2]] * (d - 1))).T.reshape(-1, d - 1):
            z = sum(c * o for c, o in zip(coefs, others))
            assert 2 * abs(u @ m @ z) <= (z @ m @ z) * (1 + 1e-9) + 1e-12


@given(params)
def test_norms_equal_oracle(p):
    d, kappa, seed = p
    M = SpdTensor(d, packed(random_spd(np.random.default_rng(seed), d, kappa)))
    assert np.allclose(reduce_basis(M).norms(M), oracle_reduced_norms(M), rtol=1e-10)
