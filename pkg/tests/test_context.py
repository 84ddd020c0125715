import numpy as np
import pytest

from toposqt.context import (
    ContextPoset,
    GenerationPolicy,
    build_poset,
    coarsenings,
    context_from_commuting,
    context_meet,
    downset,
    is_subcontext,
    span_membership_residual,
)
from toposqt.errors import (
    ContextNotInPoset,
    DimensionMismatch,
    IncommensurableOperators,
    TrivialContextExcluded,
)
from toposqt.opalg import HermitianOperator

from conftest import diag_context, random_context


def test_context_from_single_operator():
    v = context_from_commuting([np.diag([1.0, 2.0, 3.0])])
    assert v.n_blocks == 3
    v2 = context_from_commuting([np.diag([1.0, 1.0, 2.0])])
    assert v2.n_blocks == 2
    assert {b.rank for b in v2.blocks} == {1, 2}


def test_context_common_refinement():
    v = context_from_commuting([np.diag([1.0, 1.0, 2.0]), np.diag([3.0, 4.0, 4.0])])
    assert v.n_blocks == 3
    for b in v.blocks:
        assert b.rank == 1


def test_context_rejects_noncommuting():
    x = np.array([[0.0, 1.0], [1.0, 0.0]])
    z = np.diag([1.0, -1.0])
    with pytest.raises(IncommensurableOperators):
        context_from_commuting([x, z])


def test_trivial_context_excluded_by_default():
    with pytest.raises(TrivialContextExcluded):
        context_from_commuting([np.eye(2)])
    v = context_from_commuting([np.eye(2)], allow_trivial=True)
    assert v.is_trivial


def test_is_subcontext_examples():
    v = diag_context(1, 2, 3)
    assert is_subcontext(v, v)
    c = diag_context(1, 1, 2)
    assert is_subcontext(c, v)
    assert not is_subcontext(v, c)
    vz = diag_context(1, 2)
    vx = context_from_commuting([np.array([[0.0, 1.0], [1.0, 0.0]])])
    assert not is_subcontext(vz, vx)
    assert not is_subcontext(vx, vz)


def test_is_subcontext_agrees_with_span_oracle(rng):
    for _ in range(15):
        dim = int(rng.integers(2, 5))
        a = random_context(rng, dim)
        b = random_context(rng, dim)
        for vp, v in [(a, b), (b, a)]:
            claimed = is_subcontext(vp, v)
            # oracle: vp <= v iff every block of vp lies in the span of v's blocks
            residual = max(span_membership_residual(q.mat, v) for q in vp.blocks)
            assert claimed == (residual < 1e-9)


def test_coarsenings_counts():
    assert coarsenings(diag_context(1, 2)) == set()
    assert len(coarsenings(diag_context(1, 2, 3))) == 3
    # S(4,2) + S(4,3) = 7 + 6 proper coarsenings with >= 2 blocks
    assert len(coarsenings(diag_context(1, 2, 3, 4))) == 13
    with_triv = coarsenings(diag_context(1, 2, 3), include_trivial=True)
    assert len(with_triv) == 4


def test_build_poset_single_seed():
    z = HermitianOperator(np.diag([1.0, -1.0]))
    poset = build_poset(GenerationPolicy(seeds=(("Z", z),), closure="none"))
    assert len(poset) == 1


def test_build_poset_incompatible_seeds_make_antichain(dim2_poset):
    assert len(dim2_poset) == 2
    a, b = dim2_poset.ids()
    assert not dim2_poset.leq(a, b) and not dim2_poset.leq(b, a)
    for cid in dim2_poset.ids():
        assert dim2_poset.downset_ids(cid) == [cid]


def test_build_poset_coarsening_closure(dim3_poset):
    assert len(dim3_poset) == 4
    top = [c for c in dim3_poset.contexts.values() if c.n_blocks == 3][0]
    assert len(dim3_poset.downset_ids(top.id)) == 4
    down = downset(dim3_poset, top)
    assert down[0].id == top.id  # descending block count
    assert all(c.n_blocks == 2 for c in down[1:])


def test_build_poset_pairwise_meets():
    a = HermitianOperator(np.diag([1.0, 1.0, 2.0, 3.0]))
    b = HermitianOperator(np.diag([5.0, 6.0, 6.0, 7.0]))
    pol = GenerationPolicy(seeds=(("A", a), ("B", b)), closure="pairwise_meets")
    poset = build_poset(pol)
    # the two seeds commute: one maximal context; meets add nothing new
    assert len(poset) == 1

    # noncommuting seeds sharing the coarsening {e1,e2,e3 | e4}
    c = HermitianOperator(np.diag([1.0, 2.0, 2.0, 3.0]))
    d = HermitianOperator(np.array([[0.0, 1.0, 0, 0],
                                    [1.0, 0.0, 0, 0],
                                    [0, 0, 5.0, 0],
                                    [0, 0, 0, 6.0]]))
    pol2 = GenerationPolicy(seeds=(("C", c), ("D", d)), closure="pairwise_meets")
    poset2 = build_poset(pol2)
    vc = context_from_commuting([c.mat])
    vd = context_from_commuting([d.mat])
    meet = context_meet(vc, vd)
    assert len(poset2) == 3
    assert meet.id in poset2.contexts
    assert not meet.is_trivial
    assert is_subcontext(meet, vc) and is_subcontext(meet, vd)


def test_context_meet_is_maximal_common_coarsening(rng):
    for _ in range(10):
        dim = int(rng.integers(2, 5))
        v1 = random_context(rng, dim)
        v2 = random_context(rng, dim)
        m = context_meet(v1, v2)
        assert is_subcontext(m, v1) and is_subcontext(m, v2)
        # every common coarsening of v1 is below the meet
        for c in coarsenings(v1, include_trivial=True):
            if is_subcontext(c, v2):
                assert is_subcontext(c, m) or c.id == m.id


def test_downset_errors(dim3_poset):
    # eigenvalue relabelling keeps the same partition, hence the same id
    assert diag_context(4, 5, 6).id in dim3_poset.contexts
    foreign = context_from_commuting([np.array([[0.0, 1.0, 0.0],
                                                [1.0, 0.0, 0.0],
                                                [0.0, 0.0, 2.0]])])
    with pytest.raises(ContextNotInPoset):
        dim3_poset.downset_ids(foreign.id)


def test_canonical_ids_stable():
    a = HermitianOperator(np.diag([1.0, 2.0, 3.0]))
    pol = GenerationPolicy(seeds=(("A", a),), closure="coarsenings")
    p1 = build_poset(pol)
    p2 = build_poset(pol)
    assert p1.ids() == p2.ids()
    assert p1.fingerprint() == p2.fingerprint()


def test_downward_closure_of_coarsening_poset(dim3_poset):
    for child, parent in dim3_poset.comparable_pairs():
        assert set(dim3_poset.downset_ids(child)) <= set(dim3_poset.downset_ids(parent))


def test_poset_rejects_mixed_dimensions():
    with pytest.raises(DimensionMismatch):
        ContextPoset([diag_context(1, 2), diag_context(1, 2, 3)])


def test_build_poset_empty_for_scalar_seeds():
    from toposqt.errors import EmptyPoset

    s = HermitianOperator(2.0 * np.eye(3))
    with pytest.raises(EmptyPoset):
        build_poset(GenerationPolicy(seeds=(("S", s),), closure="none"))
    # with the augmented flag the trivial context is admitted
    poset = build_poset(GenerationPolicy(seeds=(("S", s),), closure="none",
                                         include_trivial=True))
    assert len(poset) == 1
    assert next(iter(poset.contexts.values())).is_trivial
