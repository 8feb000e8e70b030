import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from injnorm.construction import (
    check_eqinter2,
    lemma1_construct,
    theorem1_witness,
    theorem2_embedding,
)
from injnorm.spaces import Field, LinearMap, Space, euclidean_iso_for_lp, norm, pair
from injnorm.symtensor import add, eval_tensor, scale

C4 = 2 ** 0.25


def iso(m, p, field=Field.REAL):
    T, _ = euclidean_iso_for_lp(m, p, field)
    return LinearMap(T.matrix, T.domain, Space.lp(m, p, field))


def is_signed_permutation(A):
    A = np.abs(np.asarray(A))
    return np.allclose(np.sort(A, axis=1)[:, :-1], 0, atol=1e-9) and np.allclose(A.max(axis=1), 1, atol=1e-9) \
        and sorted(A.argmax(axis=1)) == list(range(len(A)))


# -- biorthogonal system examples ------------------------------------------------------------

def test_lemma1_euclidean():
    E = Space.lp(3, 2)
    res = lemma1_construct(E, iso(3, 2))
    assert res.d == pytest.approx(1.0, abs=1e-12)
    assert is_signed_permutation(res.xs) and is_signed_permutation(res.phis)
    np.testing.assert_allclose(res.sigma, 1.0, atol=1e-12)
    assert res.passed


def test_lemma1_l4():
    res = lemma1_construct(Space.lp(2, 4), iso(2, 4))
    assert res.d == pytest.approx(C4, abs=1e-12)
    assert is_signed_permutation(res.phis)
    assert np.allclose(np.abs(res.xs[0]).max(), C4) and np.count_nonzero(np.abs(res.xs[0]) > 1e-9) == 1
    np.testing.assert_allclose(res.sigma, C4, atol=1e-9)
    np.testing.assert_allclose(np.diag(res.pairings()).real, C4, atol=1e-9)
    assert res.passed


def test_lemma1_l1():
    res = lemma1_construct(Space.lp(2, 1), iso(2, 1))
    assert res.d == pytest.approx(math.sqrt(2), abs=1e-9)
    assert res.passed
    d = res.diagnostics
    assert d["biorth_offdiag_residual"] <= 1e-8
    assert 1 - 1e-8 <= d["biorth_diag_min"] and d["biorth_diag_max"] <= res.d + 1e-6


def test_lemma1_rescales_or_rejects_bad_normalization():
    E = Space.lp(2, 2)
    T = LinearMap(2 * np.eye(2), Space.lp(2, 2), E)
    res = lemma1_construct(E, T)
    assert res.diagnostics["inverse_norm"] == pytest.approx(0.5)
    np.testing.assert_allclose(res.T.matrix, np.eye(2), atol=1e-12)
    assert res.d == pytest.approx(1.0) and res.passed
    with pytest.raises(ValueError):
        lemma1_construct(E, T, rescale=False)


def test_lemma1_rejects_singular_and_mismatched_maps():
    E = Space.lp(2, 2)
    with pytest.raises(np.linalg.LinAlgError):
        lemma1_construct(E, LinearMap(np.ones((2, 2)), Space.lp(2, 2), E))
    with pytest.raises(ValueError):
        lemma1_construct(E, LinearMap(np.eye(2), Space.lp(2, 4), E))
    with pytest.raises(ValueError):
        lemma1_construct(Space.lp(3, 2), LinearMap(np.eye(2), Space.lp(2, 2), E))


def test_eqinter2_examples():
    res = lemma1_construct(Space.lp(3, 2), iso(3, 2))
    assert check_eqinter2(res, 2).sup_value == pytest.approx(1.0, abs=1e-9)
    res = lemma1_construct(Space.lp(2, 4), iso(2, 4))
    for r in (2, 3):
        chk = check_eqinter2(res, r, certify=True)
        assert chk.sup_value == pytest.approx(C4, abs=1e-9)
        assert chk.target == pytest.approx(C4, abs=1e-12)
        assert chk.certified.lower - 1e-9 <= C4 <= chk.certified.upper + 1e-9
        assert chk.passed
    with pytest.raises(ValueError):
        check_eqinter2(res, 1.5)


def test_lemma1_on_polytope_with_supplied_iso():
    # hexagonal norm; T = I is rescaled internally so that ||T^-1|| = 1
    gens = [[1, 0], [0.5, math.sqrt(3) / 2], [-0.5, math.sqrt(3) / 2]]
    F = Space.polytope(gens)
    res = lemma1_construct(F, LinearMap(np.eye(2), Space.lp(2, 2), F))
    assert res.passed
    assert check_eqinter2(res, 2.5).passed


# -- witnesses ------------------------------------------------------------------------

def _same_tensor(t, expect, rng, count=5):
    for _ in range(count):
        phi = rng.standard_normal(t.ambient.dim)
        assert eval_tensor(t, phi) == pytest.approx(expect(phi), abs=1e-9)


def test_witness_euclidean_plane():
    w = theorem1_witness(Space.lp(2, 2), 2)
    rng = np.random.default_rng(0)
    k1 = int(np.argmax(np.abs(w.x1)))
    k2 = int(np.argmax(np.abs(w.x2)))
    assert {k1, k2} == {0, 1}
    _same_tensor(w.u, lambda phi: phi[k1] ** 2, rng)
    _same_tensor(w.v, lambda phi: phi[k2] ** 2, rng)


def test_witness_complex_l4_cancels_scaling():
    E = Space.lp(2, 4, Field.COMPLEX)
    w = theorem1_witness(E, 2)
    k1 = int(np.argmax(np.abs(w.x1)))
    rng = np.random.default_rng(1)
    for _ in range(5):
        phi = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        assert eval_tensor(w.u, phi) == pytest.approx(phi[k1] ** 2 * (w.x1[k1] / abs(w.x1[k1])) ** 2, abs=1e-9)
    assert norm(E, w.x1) == pytest.approx(C4)


def test_witness_in_a_plane_of_l2_3():
    w = theorem1_witness(Space.lp(3, 2), 3, plane=[[1, 0, 0], [0, 1, 0]])
    assert np.allclose(np.abs(w.x1[2]), 0) and np.allclose(np.abs(w.x2[2]), 0)
    assert sorted(np.argmax(np.abs([w.x1, w.x2]), axis=1)) == [0, 1]
    rng = np.random.default_rng(2)
    k1 = int(np.argmax(np.abs(w.x1)))
    s = np.sign(w.x1[k1]) ** 3
    _same_tensor(w.u, lambda phi: s * phi[k1] ** 3, rng)


def test_witness_errors():
    with pytest.raises(ValueError):
        theorem1_witness(Space.lp(2, 2), 1)
    with pytest.raises(ValueError):
        theorem1_witness(Space.lp(1, 2), 2)
    with pytest.raises(ValueError):
        theorem1_witness(Space.lp(3, 2), 2, plane=[[1, 0, 0], [2, 0, 0]])
    with pytest.raises(ValueError):
        # a non-coordinate plane of a non-Euclidean space needs an explicit T
        theorem1_witness(Space.lp(3, 4), 2, plane=[[1, 1, 0], [0, 0, 1]])


@settings(max_examples=10, deadline=None)
@given(p=st.sampled_from([1.0, 4.0, math.inf]), n=st.integers(2, 3), cplx=st.booleans(),
       seed=st.integers(0, 2**31))
def test_witness_algebraic_identity(p, n, cplx, seed):
    field = Field.COMPLEX if cplx else Field.REAL
    E = Space.lp(2, p, field)
    w = theorem1_witness(E, n, starts=16)
    rng = np.random.default_rng(seed)
    scale_n = norm(E, w.x1) ** n
    for _ in range(5):
        phi = rng.standard_normal(2) + (1j * rng.standard_normal(2) if cplx else 0)
        zeta = np.exp(1j * rng.uniform(0, 2 * np.pi)) if cplx else rng.choice([-1.0, 1.0])
        lhs = eval_tensor(add(w.u, scale(w.v, zeta)), phi)
        rhs = (pair(phi, w.x1) ** n + zeta * pair(phi, w.x2) ** n) / scale_n
        assert abs(lhs - rhs) <= 1e-12 * (1 + abs(rhs))


# -- embeddings -------------------------------------------------------------------------

def test_embedding_euclidean():
    pre = theorem2_embedding(Space.lp(4, 2), 3, 2)
    assert pre.eps == pytest.approx(0.0, abs=1e-12)
    A = np.abs(pre.xs)
    assert np.allclose(A[:, 3], 0) and is_signed_permutation(A[:, :3])
    pre = theorem2_embedding(Space.lp(4, 2), 2, 3)
    assert pre.m == 2 and np.allclose(np.abs(pre.xs)[:, 2:], 0)


def test_embedding_l4_with_iso():
    pre = theorem2_embedding(Space.lp(2, 4), 2, 2, T=iso(2, 4))
    assert pre.eps == pytest.approx(C4 - 1, abs=1e-12)
    t = pre.embed([1.0, -0.5])
    assert t.degree == 2 and len(t) == 2


def test_embedding_errors():
    with pytest.raises(ValueError):
        theorem2_embedding(Space.lp(2, 4), 2, 2)
    with pytest.raises(ValueError):
        theorem2_embedding(Space.lp(2, 2), 3, 2)
    with pytest.raises(ValueError):
        theorem2_embedding(Space.lp(2, 2), 2, 1)
    pre = theorem2_embedding(Space.lp(2, 2), 2, 2)
    with pytest.raises(ValueError):
        pre.embed([1.0, 2.0, 3.0])


# -- invariants on random systems ------------------------------------------------------

@settings(max_examples=8, deadline=None)
@given(p=st.sampled_from([1.0, 1.5, 2.0, 3.0, math.inf]), m=st.integers(2, 3), cplx=st.booleans(),
       seed=st.integers(0, 2**31))
def test_lemma1_invariants_random_iso(p, m, cplx, seed):
    field = Field.COMPLEX if cplx else Field.REAL
    F = Space.lp(m, p, field)
    rng = np.random.default_rng(seed)
    M = np.eye(m) + 0.3 * rng.standard_normal((m, m))
    if cplx:
        M = M + 0.3j * rng.standard_normal((m, m))
    if np.linalg.cond(M) > 50:
        return
    res = lemma1_construct(F, LinearMap(M, Space.lp(m, 2, field), F), starts=32, seed=seed % 1000)
    P = res.pairings()
    off = P - np.diag(np.diag(P))
    assert np.abs(off).max() <= 1e-8
    assert np.all(np.real(np.diag(P)) >= 1 - 1e-8) and np.all(np.real(np.diag(P)) <= res.d + 1e-6)
    assert np.all(np.diff(res.sigma) <= 1e-9)
    assert res.sigma.min() >= 1 - 1e-6 and res.sigma.max() <= res.d + 1e-6
    for r in (2, 2.5, 3):
        assert check_eqinter2(res, r, starts=32).passed
