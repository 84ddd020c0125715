"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; every criterion also enforces its runtime budget.
"""
import itertools
import json
import os
import time
from contextlib import contextmanager

import numpy as np

from toposqt.context import Context, ContextPoset, context_from_commuting
from toposqt.dasein import (
    all_clopen_subobjects,
    build_spectral_presheaf,
    clopen_heyting,
    clopen_subobject,
    inner_das_proj,
    inner_das_sa,
    lattice_inner_oracle,
    lattice_outer_oracle,
    outer_das_proj,
    outer_das_sa,
    restriction_surjectivity_check,
)
from toposqt.ks import ks_poset_from_witness, load_witness, parity_oracle, section_search
from toposqt.opalg import (
    Projection,
    StateVector,
    matrices_equal,
    projection_join,
    spectral_order_leq,
)
from toposqt.presheaf import principal_sieve, sieve_heyting, sieves_on
from toposqt.qvalue import (
    KPair,
    OrderPreservingFn,
    OrderReversingFn,
    RPair,
    bv_decompose,
    constant_fn,
    k_embed,
    k_ops,
    k_square,
    k_zero,
    pr_quotient,
    rpair_equiv,
)
from toposqt.transform import (
    UnitaryOperator,
    covariance_check,
    direct_sum_translate,
    embed_context_tensor,
    tensor_product_context,
    tensor_translate,
    translation_gap_witness,
    truth_covariance_check,
)
from toposqt.truth import (
    antonymous_fn,
    cone,
    expectation_bracket,
    filters_of_context,
    observable_fn,
    pseudo_state,
    truth_value,
    truth_value_via_pseudo_state,
)

from conftest import (
    diag_context,
    random_context,
    random_hermitian,
    random_projection,
    random_state,
    random_unitary,
)

SCENARIOS = os.path.join(os.path.dirname(__file__), "..", "scenarios")


@contextmanager
def criterion(n, budget_s, description):
    start = time.time()
    try:
        yield
    except BaseException:
        print("ACCEPTANCE %02d FAIL (%.2fs): %s" % (n, time.time() - start, description))
        raise
    elapsed = time.time() - start
    status = "PASS" if elapsed < budget_s else "FAIL (over budget)"
    print("ACCEPTANCE %02d %s (%.2fs, budget %gs): %s"
          % (n, status, elapsed, budget_s, description))
    assert elapsed < budget_s


def test_criterion_01_daseinisation_oracle():
    rng = np.random.default_rng(101)
    with criterion(1, 5.0, "projection daseinisation equals the lattice extremum "
                           "on 50 random pairs per dimension 2-4"):
        for dim in (2, 3, 4):
            for _ in range(50):
                v = random_context(rng, dim)
                p = random_projection(rng, dim)
                fast_o = outer_das_proj(p, v)
                fast_i = inner_das_proj(p, v)
                assert matrices_equal(fast_o.mat, lattice_outer_oracle(p, v).mat, 1e-9)
                assert matrices_equal(fast_i.mat, lattice_inner_oracle(p, v).mat, 1e-9)


def _spectral_candidates(a, v):
    from toposqt.opalg import spectral_decompose

    eigs = spectral_decompose(a).eigenvalues
    for combo in itertools.product(eigs, repeat=v.n_blocks):
        yield sum(c * q.mat for c, q in zip(combo, v.blocks))


def test_criterion_02_sa_daseinisation_sandwich_minimality():
    rng = np.random.default_rng(102)
    with criterion(2, 10.0, "self-adjoint daseinisation sandwich and spectral-order "
                            "extremality; worked diag(1,2,3) instance"):
        a = np.diag([1.0, 2.0, 3.0])
        v = diag_context(1, 1, 2)
        assert matrices_equal(outer_das_sa(a, v).mat, np.diag([2.0, 2.0, 3.0]), 1e-9)
        assert matrices_equal(inner_das_sa(a, v).mat, np.diag([1.0, 1.0, 3.0]), 1e-9)
        for _ in range(50):
            dim = int(rng.integers(2, 5))
            v = random_context(rng, dim)  # at most dim <= 4 blocks
            a = random_hermitian(rng, dim)
            outer = outer_das_sa(a, v).mat
            inner = inner_das_sa(a, v).mat
            assert spectral_order_leq(inner, a) and spectral_order_leq(a, outer)
            above = [c for c in _spectral_candidates(a, v) if spectral_order_leq(a, c)]
            below = [c for c in _spectral_candidates(a, v) if spectral_order_leq(c, a)]
            # the daseinisations are candidates themselves and extreme among all
            assert any(matrices_equal(outer, c, 1e-7) for c in above)
            assert any(matrices_equal(inner, c, 1e-7) for c in below)
            assert all(spectral_order_leq(outer, c) for c in above)
            assert all(spectral_order_leq(c, inner) for c in below)


def test_criterion_03_heyting_suites(dim2_poset, dim3_poset, fork_poset):
    with criterion(3, 30.0, "sieve and clopen Heyting algebras: distributivity and "
                            "adjunction exhaustively, excluded middle fails somewhere"):
        saw_lem_failure = False
        for poset in (dim2_poset, dim3_poset, fork_poset):
            for stage in poset.ids():
                if len(poset.downset_ids(stage)) > 5:
                    continue
                sieves = sieves_on(poset, stage)
                top = principal_sieve(poset, stage).members
                for s, t, r in itertools.product(sieves, repeat=3):
                    land = sieve_heyting(poset, "and", s, sieve_heyting(poset, "or", t, r))
                    lor = sieve_heyting(poset, "or", sieve_heyting(poset, "and", s, t),
                                        sieve_heyting(poset, "and", s, r))
                    assert land.members == lor.members
                    imp = sieve_heyting(poset, "implies", s, t)
                    assert (r.members <= imp.members) == ((r.members & s.members) <= t.members)
                for s in sieves:
                    lem = sieve_heyting(poset, "or", s, sieve_heyting(poset, "not", s))
                    if lem.members != top:
                        saw_lem_failure = True
        assert saw_lem_failure

        chain = ContextPoset([diag_context(1, 2, 3), diag_context(1, 1, 2)])
        saw_clopen_lem_failure = False
        for poset in (dim2_poset, chain):
            sigma = build_spectral_presheaf(poset)
            assert sigma.total_fibre_count() <= 6
            subs = all_clopen_subobjects(sigma)
            for s, t, r in itertools.product(subs, repeat=3):
                land = clopen_heyting("and", s, clopen_heyting("or", t, r))
                lor = clopen_heyting("or", clopen_heyting("and", s, t),
                                     clopen_heyting("and", s, r))
                assert land.selected == lor.selected
                imp = clopen_heyting("implies", s, t)
                left = all(r.selected[c] <= imp.selected[c] for c in sigma.fibre)
                meet = clopen_heyting("and", r, s)
                right = all(meet.selected[c] <= t.selected[c] for c in sigma.fibre)
                assert left == right
            for s in subs:
                lem = clopen_heyting("or", s, clopen_heyting("not", s))
                if any(len(lem.selected[c]) < len(sigma.fibre[c]) for c in sigma.fibre):
                    saw_clopen_lem_failure = True
        assert saw_clopen_lem_failure


def test_criterion_04_join_morphism_meet_failure(dim3_poset):
    rng = np.random.default_rng(104)
    with criterion(4, 5.0, "daseinisation preserves joins on 100 random pairs and "
                           "strictly shrinks the meet for Q = 1 - P"):
        sigma = build_spectral_presheaf(dim3_poset)
        for _ in range(100):
            p = random_projection(rng, 3)
            q = random_projection(rng, 3)
            lhs = clopen_subobject(projection_join(p, q), dim3_poset, "outer", sigma=sigma)
            rhs = clopen_heyting("or",
                                 clopen_subobject(p, dim3_poset, "outer", sigma=sigma),
                                 clopen_subobject(q, dim3_poset, "outer", sigma=sigma))
            assert lhs.selected == rhs.selected
        p = random_projection(rng, 3, rank=1)
        q = np.eye(3) - p
        das_meet = clopen_subobject(np.zeros((3, 3)), dim3_poset, "outer", sigma=sigma)
        meet_das = clopen_heyting("and",
                                  clopen_subobject(p, dim3_poset, "outer", sigma=sigma),
                                  clopen_subobject(q, dim3_poset, "outer", sigma=sigma))
        assert all(das_meet.selected[c] <= meet_das.selected[c] for c in sigma.fibre)
        assert any(das_meet.selected[c] < meet_das.selected[c] for c in sigma.fibre)


def test_criterion_05_restriction_surjectivity(dim3_poset):
    rng = np.random.default_rng(105)
    with criterion(5, 5.0, "daseinised subobjects restrict onto, for 50 random "
                           "projections over the dim-3 coarsening poset"):
        for _ in range(50):
            p = random_projection(rng, 3)
            assert restriction_surjectivity_check(p, dim3_poset) is None


def test_criterion_06_kochen_specker(dim2_poset):
    with criterion(6, 60.0, "dim-2 antichain has sections; the dim-4 witness poset "
                            "has none, matching the parity oracle"):
        cert2 = section_search(dim2_poset)
        assert cert2.outcome == "sections_found" and cert2.n_sections >= 1
        w = load_witness("cabello18")
        poset = ks_poset_from_witness(w)
        cert4 = section_search(poset)
        assert cert4.outcome == "exhausted" and cert4.n_sections == 0
        assert parity_oracle(w) is True


def test_criterion_07_filter_encoding():
    rng = np.random.default_rng(107)
    with criterion(7, 10.0, "observable/antonymous encoding identities for every "
                            "filter of every context lattice in a dim-3 sweep"):
        contexts = [diag_context(1, 2, 3), diag_context(1, 1, 2),
                    random_context(rng, 3), random_context(rng, 3)]
        for v in contexts:
            a = random_hermitian(rng, 3)
            douter = outer_das_sa(a, v)
            dinner = inner_das_sa(a, v)
            for f in filters_of_context(v):
                c = cone(f)
                assert abs(observable_fn(douter, f) - observable_fn(a, c)) < 1e-7
                assert abs(antonymous_fn(dinner, f) - antonymous_fn(a, c)) < 1e-7


def test_criterion_08_expectation_brackets():
    rng = np.random.default_rng(108)
    with criterion(8, 5.0, "bracket inequality on 200 random states, eigenstate "
                           "collapse on 50, worked (1,2,3) instance"):
        a = np.diag([1.0, 2.0, 3.0])
        uniform = StateVector(np.ones(3) / np.sqrt(3))
        g, mean, f = expectation_bracket(a, uniform)
        assert abs(g - 1.0) < 1e-7 and abs(mean - 2.0) < 1e-7 and abs(f - 3.0) < 1e-7
        for _ in range(200):
            dim = int(rng.integers(2, 5))
            op = random_hermitian(rng, dim)
            psi = StateVector(random_state(rng, dim))
            g, mean, f = expectation_bracket(op, psi)
            assert g <= mean + 1e-9 and mean <= f + 1e-9
        for _ in range(50):
            dim = int(rng.integers(2, 5))
            op = random_hermitian(rng, dim)
            w, vecs = np.linalg.eigh(op)
            k = int(rng.integers(0, dim))
            psi = StateVector(vecs[:, k])
            g, mean, f = expectation_bracket(op, psi)
            assert abs(g - mean) < 1e-7 and abs(f - mean) < 1e-7


def test_criterion_09_truth_equivalence_inverse_image(dim3_poset):
    rng = np.random.default_rng(109)
    with criterion(9, 10.0, "truth values agree with the pseudo-state subset form; "
                            "inverse images recover daseinised subobjects"):
        from toposqt.qvalue import inverse_image_of_image

        for _ in range(15):
            psi = StateVector(random_state(rng, 3))
            p = random_projection(rng, 3)
            w = pseudo_state(psi, dim3_poset)
            for stage in dim3_poset.ids():
                s1 = truth_value(p, psi, stage, dim3_poset)
                s2 = truth_value_via_pseudo_state(p, w, stage, dim3_poset)
                assert s1.members == s2.members
        count = 0
        while count < 20:
            p = random_projection(rng, 3)
            if round(np.trace(p).real) == 0:
                continue
            count += 1
            sub = clopen_subobject(p, dim3_poset, "outer")
            got = inverse_image_of_image(p, dim3_poset)
            assert {c: frozenset(s) for c, s in got.items()} == dict(sub.selected)


def test_criterion_10_completion_algebra(dim3_poset, dim2_poset):
    rng = np.random.default_rng(110)

    def random_orf(poset, stage):
        down = poset.downset_ids(stage)
        vals = {}
        for cid in down:
            above = [vals[p] for p in down if p != cid and poset.leq(cid, p) and p in vals]
            base = max(above) if above else float(rng.normal())
            vals[cid] = base + float(np.abs(rng.normal()))
        return OrderReversingFn(poset, stage, vals)

    with criterion(10, 10.0, "completion group laws, squares, quotient map and "
                             "bounded-variation reconstruction"):
        for poset in (dim2_poset, dim3_poset):
            for stage in poset.ids():
                if len(poset.downset_ids(stage)) > 4:
                    continue
                pairs = [KPair(random_orf(poset, stage), random_orf(poset, stage))
                         for _ in range(4)]
                zero = k_zero(poset, stage)
                for x in pairs:
                    assert k_ops("eq", k_ops("add", x, k_ops("neg", x)), zero)
                    assert k_ops("eq", k_ops("add", x, zero), x)
                for x, y in itertools.product(pairs, repeat=2):
                    assert k_ops("eq", k_ops("add", x, y), k_ops("add", y, x))
                for x, y, z in itertools.product(pairs, repeat=3):
                    assert k_ops("eq", k_ops("add", k_ops("add", x, y), z),
                                 k_ops("add", x, k_ops("add", y, z)))
        stage = max(dim3_poset.contexts.values(), key=lambda c: c.n_blocks).id
        down = dim3_poset.downset_ids(stage)
        for _ in range(200):
            nu = random_orf(dim3_poset, stage)
            diff = k_square(k_embed(nu)).as_difference()
            assert all(abs(diff[c] - nu.values[c] ** 2) < 1e-9 for c in down)
        for _ in range(200):
            nu = random_orf(dim3_poset, stage)
            floor_val = min(nu.values.values()) - abs(float(rng.normal()))
            mu = OrderPreservingFn(dim3_poset, stage, {k: floor_val for k in down})
            x = RPair(mu, nu)
            shift = float(rng.normal()) * 0.05
            try:
                y = RPair(OrderPreservingFn(dim3_poset, stage,
                                            {k: v + shift for k, v in mu.values.items()}),
                          OrderReversingFn(dim3_poset, stage,
                                           {k: v - shift for k, v in nu.values.items()}))
            except Exception:
                continue
            assert rpair_equiv(x, y) and k_ops("eq", pr_quotient(x), pr_quotient(y))
            z = RPair(mu, nu.add(constant_fn(dim3_poset, stage, 1.0)))
            assert not rpair_equiv(x, z)
            assert not k_ops("eq", pr_quotient(x), pr_quotient(z))
        for _ in range(200):
            f = {cid: float(rng.normal()) for cid in down}
            a, b = bv_decompose(dim3_poset, stage, f)
            assert all(abs((a.values[c] - b.values[c]) - f[c]) < 1e-9 for c in down)


def test_criterion_11_covariance(dim2_poset):
    rng = np.random.default_rng(111)
    with criterion(11, 10.0, "conjugation covariance on 100 random triples and "
                             "sieve-level covariance on the closed dim-2 family"):
        for _ in range(100):
            dim = int(rng.integers(2, 5))
            u = UnitaryOperator(random_unitary(rng, dim))
            v = random_context(rng, dim)
            p = random_projection(rng, dim)
            assert covariance_check(p, u, v) is None
        h = UnitaryOperator(np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2))
        states = [StateVector([1.0, 0.0]), StateVector(np.array([1.0, 1.0]) / np.sqrt(2))]
        projs = [np.diag([1.0, 0.0]), 0.5 * np.array([[1.0, 1.0], [1.0, 1.0]]),
                 np.zeros((2, 2)), np.eye(2)]
        for psi in states:
            for p in projs:
                for stage in dim2_poset.ids():
                    assert truth_covariance_check(p, h, psi, stage, dim2_poset) is None


def test_criterion_12_composite_translations():
    rng = np.random.default_rng(112)
    with criterion(12, 30.0, "direct-sum identities on 50 random instances; tensor "
                             "translation on product contexts; gap search record"):
        for _ in range(50):
            d1 = int(rng.integers(2, 4))
            d2 = int(rng.integers(2, 4))
            a1 = random_hermitian(rng, d1)
            a2 = random_hermitian(rng, d2)
            v1 = random_context(rng, d1)
            v2 = random_context(rng, d2)
            chk = direct_sum_translate(a1, a2, v1, v2=v2)
            assert chk.ok and chk.blockwise_ok and chk.arrow_ok

        v1 = diag_context(1, 2)
        vx = context_from_commuting([np.array([[0.0, 1.0], [1.0, 0.0]])])
        product_ctxs = [embed_context_tensor(v1, 2), embed_context_tensor(vx, 2),
                        tensor_product_context(v1, vx), tensor_product_context(v1, v1),
                        tensor_product_context(vx, vx)]
        for w in product_ctxs:
            for _ in range(3):
                a1 = random_hermitian(rng, 2)
                lhs = tensor_translate(a1, w, 2, 2)
                rhs = outer_das_sa(np.kron(a1, np.eye(2)), w).mat
                assert matrices_equal(lhs, rhs, 1e-8)

        s2 = 1 / np.sqrt(2)
        phi = np.array([s2, 0, 0, s2])
        p_phi = np.outer(phi, phi)
        p10 = np.zeros((4, 4))
        p10[2, 2] = 1.0
        mixed = Context([Projection(p10), Projection(p_phi),
                         Projection(np.eye(4) - p10 - p_phi)])
        poset = ContextPoset(product_ctxs[:3] + [mixed])
        witness, records = translation_gap_witness(np.diag([1.0, -1.0]), poset, 2, 2)
        assert len(records) == len(poset)  # a comparison record per context
        assert witness is not None and witness.gap > 1.0


def test_criterion_13_cli_determinism(capsys):
    from toposqt.cli import main

    def path(name):
        return os.path.join(SCENARIOS, name + ".json")

    commands = [
        ["contexts", "--scenario", path("dim2")],
        ["contexts", "--scenario", path("dim3")],
        ["daseinise", "--scenario", path("dim3"), "--op", "A", "--mode", "outer"],
        ["daseinise", "--scenario", path("dim2"), "--op", "PX", "--mode", "inner"],
        ["truth", "--scenario", path("dim3"), "--prop", "A in [1,1]", "--state", "e1"],
        ["bracket", "--scenario", path("dim3"), "--op", "A", "--state", "uniform"],
        ["qvalue", "--scenario", path("dim3"), "--op", "A", "--state", "e1"],
        ["ks", "--scenario", path("ks4")],
        ["composite", "--scenario", path("composite22"), "--op", "A1", "--op2", "A2"],
    ]
    with criterion(13, 10.0, "every CLI command emits byte-identical reports when "
                             "run twice on the shipped scenarios"):
        for argv in commands:
            assert main(argv) == 0
            first = capsys.readouterr().out
            assert main(argv) == 0
            second = capsys.readouterr().out
            assert first == second and first
            json.loads(first)
