import numpy as np
import pytest

from toposqt.errors import DimensionMismatch, NonHermitianInput, ValidationError
from toposqt.opalg import (
    DEFAULT_TOL,
    DensityMatrix,
    HermitianOperator,
    Projection,
    StateVector,
    TolerancePolicy,
    expectation,
    family_to_operator,
    matrices_equal,
    proj_leq,
    projection_join,
    projection_meet,
    projection_meet_join,
    proposition_projector,
    spectral_decompose,
    spectral_family,
    spectral_order_leq,
)

from conftest import random_hermitian, random_projection, random_state


def test_tolerance_policy_invariants():
    with pytest.raises(ValidationError):
        TolerancePolicy(eps_matrix=0.0)
    with pytest.raises(ValidationError):
        TolerancePolicy(eps_matrix=1e-6, eps_eig=1e-9)
    t = TolerancePolicy()
    assert t.eps_matrix == 1e-9 and t.eps_eig == 1e-7 and t.eps_prob == 1e-7


def test_hermitian_rejects_nonsymmetric():
    with pytest.raises(NonHermitianInput):
        HermitianOperator(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_projection_validation():
    Projection(np.diag([1.0, 0.0]))
    with pytest.raises(ValidationError):
        Projection(np.diag([0.5, 0.0]))


def test_spectral_decompose_diagonal():
    dec = spectral_decompose(np.diag([1.0, 2.0, 3.0]))
    assert dec.eigenvalues == (1.0, 2.0, 3.0)
    for k, p in enumerate(dec.eigenprojections):
        expected = np.zeros((3, 3))
        expected[k, k] = 1.0
        assert matrices_equal(p.mat, expected, 1e-12)


def test_spectral_decompose_identity_clusters():
    dec = spectral_decompose(np.eye(2))
    assert dec.eigenvalues == (1.0,)
    assert matrices_equal(dec.eigenprojections[0].mat, np.eye(2), 1e-12)


def test_spectral_decompose_rank1():
    px = 0.5 * np.array([[1.0, 1.0], [1.0, 1.0]])
    dec = spectral_decompose(px)
    assert [round(v) for v in dec.eigenvalues] == [0, 1]
    minus = np.array([1.0, -1.0]) / np.sqrt(2)
    plus = np.array([1.0, 1.0]) / np.sqrt(2)
    assert matrices_equal(dec.eigenprojections[0].mat, np.outer(minus, minus), 1e-9)
    assert matrices_equal(dec.eigenprojections[1].mat, np.outer(plus, plus), 1e-9)


def test_spectral_decompose_invariants_random(rng):
    for _ in range(20):
        dim = int(rng.integers(2, 6))
        a = random_hermitian(rng, dim)
        dec = spectral_decompose(a)
        recon = sum(v * p.mat for v, p in zip(dec.eigenvalues, dec.eigenprojections))
        assert matrices_equal(recon, a, 1e-8)
        total = sum(p.mat for p in dec.eigenprojections)
        assert matrices_equal(total, np.eye(dim), 1e-9)
        for i in range(len(dec.eigenvalues) - 1):
            assert dec.eigenvalues[i + 1] - dec.eigenvalues[i] > DEFAULT_TOL.eps_eig
            for j in range(i + 1, len(dec.eigenvalues)):
                prod = dec.eigenprojections[i].mat @ dec.eigenprojections[j].mat
                assert np.max(np.abs(prod)) < 1e-9


def test_spectral_family_of_projection():
    p = np.diag([1.0, 0.0, 0.0])
    fam = spectral_family(p)
    assert fam.jumps == (0.0, 1.0)
    assert matrices_equal(fam.value_at(-0.5).mat, np.zeros((3, 3)), 1e-12)
    assert matrices_equal(fam.value_at(0.0).mat, np.eye(3) - p, 1e-12)
    assert matrices_equal(fam.value_at(0.5).mat, np.eye(3) - p, 1e-12)
    assert matrices_equal(fam.value_at(1.0).mat, np.eye(3), 1e-12)


def test_spectral_family_diagonal_and_zero():
    fam = spectral_family(np.diag([1.0, 2.0, 3.0]))
    assert fam.jumps == (1.0, 2.0, 3.0)
    assert [c.rank for c in fam.cumulative] == [1, 2, 3]
    zf = spectral_family(np.zeros((2, 2)))
    assert zf.jumps == (0.0,)
    assert zf.cumulative[0].rank == 2


def test_spectral_family_monotone_and_reconstructs(rng):
    for _ in range(20):
        dim = int(rng.integers(2, 6))
        a = random_hermitian(rng, dim)
        fam = spectral_family(a)
        for i in range(len(fam.cumulative) - 1):
            assert proj_leq(fam.cumulative[i], fam.cumulative[i + 1])
        assert fam.cumulative[-1].rank == dim
        assert matrices_equal(family_to_operator(fam).mat, a, 1e-8)


def test_spectral_order_reflexive_and_example():
    a = np.diag([1.0, 2.0, 3.0])
    assert spectral_order_leq(a, a)
    assert spectral_order_leq(np.diag([1.0, 1.0, 3.0]), a)
    assert not spectral_order_leq(a, np.diag([1.0, 1.0, 3.0]))


def test_spectral_order_on_projections_matches_usual(rng):
    for _ in range(25):
        dim = int(rng.integers(2, 5))
        p = random_projection(rng, dim)
        q = random_projection(rng, dim)
        assert spectral_order_leq(p, q) == proj_leq(p, q)


def test_spectral_order_partial_order_properties(rng):
    dim = 3
    ops = [random_hermitian(rng, dim) for _ in range(6)]
    ops += [np.diag(sorted(rng.normal(size=dim))) for _ in range(6)]
    for a in ops:
        assert spectral_order_leq(a, a)
    for a in ops:
        for b in ops:
            if spectral_order_leq(a, b) and spectral_order_leq(b, a):
                assert matrices_equal(a, b, 1e-7)
            for c in ops:
                if spectral_order_leq(a, b) and spectral_order_leq(b, c):
                    assert spectral_order_leq(a, c)


def test_spectral_order_implies_usual_order(rng):
    from conftest import random_context
    from toposqt.dasein import outer_das_sa
    from toposqt.opalg import commutes

    pairs = []
    for _ in range(10):
        dim = int(rng.integers(2, 5))
        a = random_hermitian(rng, dim)
        pairs.append((a, outer_das_sa(a, random_context(rng, dim)).mat))
    # a genuinely non-commuting ordered pair: the middle eigenvector pair of A
    # mixes e1 with e2+e3, while its daseinisation into the coordinate context
    # separates e1 from e2, e3
    w1 = np.array([np.sqrt(2), 1.0, 1.0]) / 2
    w2 = np.array([np.sqrt(2), -1.0, -1.0]) / 2
    w3 = np.array([0.0, 1.0, -1.0]) / np.sqrt(2)
    a = (1.0 * np.outer(w1, w1) + 2.0 * np.outer(w2, w2) + 3.0 * np.outer(w3, w3))
    b = outer_das_sa(a, diag_context_3()).mat
    assert not commutes(a, b)
    pairs.append((a, b))
    for a, b in pairs:
        assert spectral_order_leq(a, b)
        for _ in range(100):
            psi = random_state(rng, a.shape[0])
            assert expectation(psi, a) <= expectation(psi, b) + 1e-9


def diag_context_3():
    from conftest import diag_context

    return diag_context(1, 2, 3)


def test_meet_join_examples():
    p = np.diag([1.0, 0.0])
    assert projection_meet(p, np.eye(2) - p).rank == 0
    j = projection_join(np.diag([1.0, 0.0, 0.0]), np.diag([0.0, 1.0, 0.0]))
    assert matrices_equal(j.mat, np.diag([1.0, 1.0, 0.0]), 1e-9)
    p3 = random_projection(np.random.default_rng(1), 3, rank=2)
    assert matrices_equal(projection_join(p3, p3).mat, p3, 1e-9)
    assert matrices_equal(projection_meet(p3, p3).mat, p3, 1e-9)


def test_meet_join_are_lattice_bounds(rng):
    for _ in range(20):
        dim = int(rng.integers(2, 5))
        p = random_projection(rng, dim)
        q = random_projection(rng, dim)
        m = projection_meet(p, q)
        j = projection_join(p, q)
        assert proj_leq(m, p) and proj_leq(m, q)
        assert proj_leq(p, j) and proj_leq(q, j)
        rp, rq = round(np.trace(p).real), round(np.trace(q).real)
        assert m.rank >= rp + rq - dim  # dimension count lower bound
        assert j.rank <= min(rp + rq, dim)


def test_meet_join_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        projection_meet_join(np.diag([1.0, 0.0]), np.diag([1.0, 0.0, 0.0]), "meet")


def test_proposition_projector_examples():
    a = np.diag([1.0, 2.0, 3.0])
    assert matrices_equal(proposition_projector(a, (1.5, 3.0)).mat,
                          np.diag([0.0, 1.0, 1.0]), 1e-9)
    assert proposition_projector(a, (10.0, 11.0)).rank == 0
    assert proposition_projector(a, (0.0, 4.0)).rank == 3


def test_proposition_projector_intersection_is_meet(rng):
    for _ in range(15):
        dim = int(rng.integers(2, 5))
        a = random_hermitian(rng, dim, scale=2.0)
        lo1, hi1 = sorted(rng.normal(size=2) * 2)
        lo2, hi2 = sorted(rng.normal(size=2) * 2)
        lo, hi = max(lo1, lo2), min(hi1, hi2)
        p1 = proposition_projector(a, (lo1, hi1))
        p2 = proposition_projector(a, (lo2, hi2))
        both = projection_meet(p1, p2)
        if hi < lo:
            inter = np.zeros((dim, dim))
        else:
            inter = proposition_projector(a, (lo, hi)).mat
        assert matrices_equal(inter, both.mat, 1e-7)


def test_proposition_projector_union():
    a = np.diag([1.0, 2.0, 3.0])
    p = proposition_projector(a, [(1.0, 1.0), (3.0, 3.0)])
    assert matrices_equal(p.mat, np.diag([1.0, 0.0, 1.0]), 1e-9)


def test_state_and_density_validation():
    StateVector(np.array([1.0, 0.0]))
    with pytest.raises(ValidationError):
        StateVector(np.array([1.0, 1.0]))
    DensityMatrix(np.eye(2) / 2)
    with pytest.raises(ValidationError):
        DensityMatrix(np.diag([2.0, -1.0]))
    with pytest.raises(ValidationError):
        DensityMatrix(np.diag([0.7, 0.7]))
