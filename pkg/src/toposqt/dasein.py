"""Daseinisation and the spectral, outer, inner and operator-valued presheaves.

Outer daseinisation of a projection into a context is the least element of the
context's projection lattice above it; inner daseinisation the greatest below.
For self-adjoint operators the approximation happens in the spectral order,
one cumulative spectral projection at a time:

    outer(A)_V integrates the inner daseinisations of A's spectral family,
    inner(A)_V integrates the right limits of the outer daseinisations.

For the finite step families used here the right limit collapses: the outer
daseinisation of a piecewise-constant right-continuous family is again
right-continuous, so inner(A)_V integrates outer_das_proj of each cumulative
projection directly.  (Tested against the brute-force spectral-order extremum
oracle.)

At finite dimension every Gelfand spectrum is discrete, so every fibre subset
is clopen and the interior operation in negation and implication is the
identity.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .context import Context, ContextPoset
from .errors import (
    ContextNotInPoset,
    DimensionMismatch,
    NonHermitianInput,
    ParentMismatch,
    StageMismatch,
    ValidationError,
)
from .opalg import (
    DEFAULT_TOL,
    HermitianOperator,
    Projection,
    TolerancePolicy,
    _as_matrix,
    is_hermitian,
    matrices_equal,
    max_abs,
    proj_leq,
    spectral_family,
)
from .presheaf import FinitePresheaf, Sieve, Subobject, validate


@dataclass(frozen=True)
class SpectralElement:
    """A point of the Gelfand spectrum of a context: the character that sends
    the chosen minimal projection to 1."""

    context_id: str
    block: int


def build_spectral_presheaf(poset: ContextPoset) -> FinitePresheaf:
    """Fibre at V: one element per block; restriction sends a block to the
    unique block of the smaller context dominating it."""
    tol = poset.tol
    fibre = {cid: tuple(range(poset.contexts[cid].n_blocks)) for cid in poset.ids()}
    restriction: Dict[Tuple[str, str], Dict] = {}
    for child, parent in poset.comparable_pairs():
        vc, vp = poset.contexts[child], poset.contexts[parent]
        rmap = {}
        for i, q in enumerate(vp.blocks):
            j = vc.dominating_block(q, tol)
            if j is None:
                raise ValidationError("no dominating block in %s for block %d of %s"
                                      % (child, i, parent))
            rmap[i] = j
        restriction[(child, parent)] = rmap
    p = FinitePresheaf(poset, fibre, restriction)
    v = validate(p)
    if v is not None:
        raise ValidationError("spectral presheaf failed validation: %s" % v)
    return p


def restrict_element(poset: ContextPoset, lam: SpectralElement, child: str) -> SpectralElement:
    """Restrict a spectral element to a subcontext."""
    vc = poset.context(child)
    vp = poset.context(lam.context_id)
    j = vc.dominating_block(vp.blocks[lam.block], poset.tol)
    if j is None:
        raise ValidationError("restriction undefined")
    return SpectralElement(child, j)


def outer_das_proj(P, v: Context, tol: TolerancePolicy = DEFAULT_TOL) -> Projection:
    """Least projection of the context above P: the sum of blocks meeting P."""
    pm = _as_matrix(P)
    if pm.shape[0] != v.dim:
        raise DimensionMismatch("projection and context dimensions differ")
    acc = np.zeros((v.dim, v.dim), dtype=complex)
    for q in v.blocks:
        if max_abs(q.mat @ pm) >= tol.eps_matrix * 100:
            acc = acc + q.mat
    return Projection(acc, tol)


def inner_das_proj(P, v: Context, tol: TolerancePolicy = DEFAULT_TOL) -> Projection:
    """Greatest projection of the context below P: the sum of blocks inside P."""
    pm = _as_matrix(P)
    if pm.shape[0] != v.dim:
        raise DimensionMismatch("projection and context dimensions differ")
    acc = np.zeros((v.dim, v.dim), dtype=complex)
    for q in v.blocks:
        if proj_leq(q, pm, tol):
            acc = acc + q.mat
    return Projection(acc, tol)


def lattice_outer_oracle(P, v: Context, tol: TolerancePolicy = DEFAULT_TOL) -> Projection:
    """Brute-force oracle: minimum of the 2^blocks lattice elements above P."""
    pm = _as_matrix(P)
    best = None
    for subset in v.lattice_subsets():
        cand = v.block_sum(subset)
        if proj_leq(pm, cand, tol):
            if best is None or cand.rank < best.rank:
                best = cand
    return best


def lattice_inner_oracle(P, v: Context, tol: TolerancePolicy = DEFAULT_TOL) -> Projection:
    """Brute-force oracle: maximum of the lattice elements below P."""
    pm = _as_matrix(P)
    best = None
    for subset in v.lattice_subsets():
        cand = v.block_sum(subset)
        if proj_leq(cand, pm, tol):
            if best is None or cand.rank > best.rank:
                best = cand
    return best


@dataclass(frozen=True)
class GlobalSectionOfG:
    """A context-indexed family of projections compatible with outer restriction."""

    values: Dict[str, Projection]


def das_proj_global(P, poset: ContextPoset, tol: TolerancePolicy = DEFAULT_TOL,
                    mode: str = "outer") -> GlobalSectionOfG:
    das = outer_das_proj if mode == "outer" else inner_das_proj
    values = {cid: das(P, poset.contexts[cid], tol) for cid in poset.ids()}
    return GlobalSectionOfG(values)


def is_global_section_of_g(values: Dict[str, Projection], poset: ContextPoset,
                           tol: TolerancePolicy = DEFAULT_TOL, mode: str = "outer") -> bool:
    das = outer_das_proj if mode == "outer" else inner_das_proj
    for child, parent in poset.comparable_pairs():
        expected = das(values[parent], poset.contexts[child], tol)
        if not matrices_equal(expected, values[child], tol.eps_matrix * 100):
            return False
    return True


def is_hyper_element(values: Dict[str, Projection], poset: ContextPoset,
                     tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    """Hyper-element of the outer presheaf: dominates its own restrictions."""
    for child, parent in poset.comparable_pairs():
        restricted = outer_das_proj(values[parent], poset.contexts[child], tol)
        if not proj_leq(restricted, values[child], tol):
            return False
    return True


def build_outer_presheaf(poset: ContextPoset) -> FinitePresheaf:
    """Fibre at V: the projection lattice of V as block-index subsets;
    restriction is outer daseinisation."""
    return _build_proj_lattice_presheaf(poset, outer=True)


def build_inner_presheaf(poset: ContextPoset) -> FinitePresheaf:
    return _build_proj_lattice_presheaf(poset, outer=False)


def _build_proj_lattice_presheaf(poset: ContextPoset, outer: bool) -> FinitePresheaf:
    tol = poset.tol
    fibre = {cid: tuple(sorted(poset.contexts[cid].lattice_subsets(), key=sorted))
             for cid in poset.ids()}
    restriction: Dict[Tuple[str, str], Dict] = {}
    for child, parent in poset.comparable_pairs():
        vc, vp = poset.contexts[child], poset.contexts[parent]
        das = outer_das_proj if outer else inner_das_proj
        rmap = {}
        for subset in fibre[parent]:
            img = das(vp.block_sum(subset), vc, tol)
            rmap[subset] = frozenset(
                j for j, q in enumerate(vc.blocks) if proj_leq(q, img, tol))
        restriction[(child, parent)] = rmap
    p = FinitePresheaf(poset, fibre, restriction)
    v = validate(p)
    if v is not None:
        raise ValidationError("projection-lattice presheaf failed validation: %s" % v)
    return p


def clopen_subobject(P, poset: ContextPoset, mode: str = "outer",
                     tol: TolerancePolicy = DEFAULT_TOL,
                     sigma: Optional[FinitePresheaf] = None) -> Subobject:
    """The clopen subobject of the spectral presheaf attached to a projection.

    outer: characters valuing the outer daseinisation at 1.
    inner: characters valuing the inner daseinisation at 0 (this equals the
    outer subobject of the complement).
    """
    if sigma is None:
        sigma = build_spectral_presheaf(poset)
    selected = {}
    for cid in poset.ids():
        v = poset.contexts[cid]
        if mode == "outer":
            das = outer_das_proj(P, v, tol)
            selected[cid] = {i for i, q in enumerate(v.blocks) if proj_leq(q, das, tol)}
        elif mode == "inner":
            das = inner_das_proj(P, v, tol)
            selected[cid] = {i for i, q in enumerate(v.blocks)
                             if not proj_leq(q, das, tol)}
        else:
            raise ValidationError("mode must be outer or inner")
    return Subobject(sigma, selected)


def surjective_restrictions(k: Subobject) -> Optional[Tuple[str, str]]:
    """None if every restriction maps each fibre onto the smaller one,
    else the first failing (child, parent) pair."""
    poset = k.parent.poset
    for child, parent in poset.comparable_pairs():
        image = {k.parent.restrict(x, parent, child) for x in k.selected[parent]}
        if image != set(k.selected[child]):
            return (child, parent)
    return None


def restriction_surjectivity_check(P, poset: ContextPoset,
                                   tol: TolerancePolicy = DEFAULT_TOL,
                                   sigma: Optional[FinitePresheaf] = None
                                   ) -> Optional[Tuple[str, str]]:
    """Daseinised subobjects restrict onto, not merely into; None means ok."""
    return surjective_restrictions(clopen_subobject(P, poset, "outer", tol, sigma))


def _integrate_family(jumps, increments, dim) -> HermitianOperator:
    acc = np.zeros((dim, dim), dtype=complex)
    for lam, inc in zip(jumps, increments):
        acc = acc + lam * inc
    return HermitianOperator(acc)


def outer_das_sa(A, v: Context, tol: TolerancePolicy = DEFAULT_TOL) -> HermitianOperator:
    """Outer daseinisation of a self-adjoint operator to a context.

    Inner-daseinise each cumulative spectral projection and integrate the
    resulting step family.  The result lies in the context's span, has its
    spectrum inside sp(A), and dominates A in the spectral order.
    """
    m = _as_matrix(A)
    if not is_hermitian(m, tol):
        raise NonHermitianInput("outer_das_sa requires a Hermitian matrix")
    if m.shape[0] != v.dim:
        raise DimensionMismatch("operator and context dimensions differ")
    fam = spectral_family(m, tol)
    prev = np.zeros((v.dim, v.dim), dtype=complex)
    increments = []
    for cum in fam.cumulative:
        cur = inner_das_proj(cum, v, tol).mat
        increments.append(cur - prev)
        prev = cur
    return _integrate_family(fam.jumps, increments, v.dim)


def inner_das_sa(A, v: Context, tol: TolerancePolicy = DEFAULT_TOL) -> HermitianOperator:
    """Inner daseinisation of a self-adjoint operator to a context.

    Outer-daseinise each cumulative spectral projection; for step families the
    right limit over mu > lambda equals the value at lambda itself (constant
    between jumps), so no grid refinement is needed.
    """
    m = _as_matrix(A)
    if not is_hermitian(m, tol):
        raise NonHermitianInput("inner_das_sa requires a Hermitian matrix")
    if m.shape[0] != v.dim:
        raise DimensionMismatch("operator and context dimensions differ")
    fam = spectral_family(m, tol)
    prev = np.zeros((v.dim, v.dim), dtype=complex)
    increments = []
    for cum in fam.cumulative:
        cur = outer_das_proj(cum, v, tol).mat
        increments.append(cur - prev)
        prev = cur
    return _integrate_family(fam.jumps, increments, v.dim)


def clopen_heyting(op: str, s: Subobject, t: Optional[Subobject] = None) -> Subobject:
    """Heyting operations on clopen subobjects of the spectral presheaf.

    Negation and implication quantify over all smaller contexts in the poset;
    fibres are finite and discrete, so no interior is taken.
    """
    parent = s.parent
    if op in ("and", "or", "implies"):
        if t is None or t.parent is not parent:
            raise ParentMismatch("binary operation needs subobjects of one presheaf")
    poset = parent.poset
    if op == "and":
        return Subobject(parent, {c: s.selected[c] & t.selected[c] for c in parent.fibre})
    if op == "or":
        return Subobject(parent, {c: s.selected[c] | t.selected[c] for c in parent.fibre})
    if op == "implies":
        selected = {}
        for cid in parent.fibre:
            keep = set()
            for x in parent.fibre[cid]:
                ok = True
                for vp in poset.downset_ids(cid):
                    rx = parent.restrict(x, cid, vp)
                    if rx in s.selected[vp] and rx not in t.selected[vp]:
                        ok = False
                        break
                if ok:
                    keep.add(x)
            selected[cid] = keep
        return Subobject(parent, selected)
    if op == "not":
        empty = Subobject(parent, {c: frozenset() for c in parent.fibre})
        return clopen_heyting("implies", s, empty)
    raise ValidationError("unknown clopen operation %r" % op)


def all_clopen_subobjects(sigma: FinitePresheaf) -> List[Subobject]:
    """Enumerate every subobject of a small spectral presheaf (exhaustive)."""
    import itertools as it

    ids = list(sigma.fibre)
    choices = []
    for cid in ids:
        elems = sigma.fibre[cid]
        subsets = []
        for r in range(len(elems) + 1):
            subsets.extend(frozenset(c) for c in it.combinations(elems, r))
        choices.append(subsets)
    out = []
    for pick in it.product(*choices):
        sel = dict(zip(ids, pick))
        try:
            out.append(Subobject(sigma, sel))
        except ValidationError:
            continue
    return out


def degroote_presheaves(ops: Dict[str, HermitianOperator], poset: ContextPoset,
                        tol: TolerancePolicy = DEFAULT_TOL):
    """Context-indexed tables of outer and inner daseinised operators.

    Validates the global-section property: restricting the entry at V to a
    smaller V' reproduces the entry at V'.
    """
    outer: Dict[str, Dict[str, HermitianOperator]] = {}
    inner: Dict[str, Dict[str, HermitianOperator]] = {}
    for name, a in ops.items():
        outer[name] = {cid: outer_das_sa(a, poset.contexts[cid], tol) for cid in poset.ids()}
        inner[name] = {cid: inner_das_sa(a, poset.contexts[cid], tol) for cid in poset.ids()}
        for child, parent in poset.comparable_pairs():
            vchild = poset.contexts[child]
            again_o = outer_das_sa(outer[name][parent], vchild, tol)
            if not matrices_equal(again_o, outer[name][child], tol.eps_eig):
                raise ValidationError("outer table not restriction-compatible for %s" % name)
            again_i = inner_das_sa(inner[name][parent], vchild, tol)
            if not matrices_equal(again_i, inner[name][child], tol.eps_eig):
                raise ValidationError("inner table not restriction-compatible for %s" % name)
    return outer, inner


def iota_sieve(alpha, lam: SpectralElement, poset: ContextPoset,
               tol: TolerancePolicy = DEFAULT_TOL) -> Sieve:
    """Sieve of subcontexts where the restricted character enters the
    daseinised subobject of alpha."""
    if lam.context_id not in poset:
        raise ContextNotInPoset("stage %r not in poset" % lam.context_id)
    members = set()
    for vp in poset.downset_ids(lam.context_id):
        ctx = poset.contexts[vp]
        restricted = restrict_element(poset, lam, vp)
        das = outer_das_proj(alpha, ctx, tol)
        if proj_leq(ctx.blocks[restricted.block], das, tol):
            members.add(vp)
    return Sieve(lam.context_id, frozenset(members))


def equality_sieve(l1: SpectralElement, l2: SpectralElement, poset: ContextPoset) -> Sieve:
    """Sieve of subcontexts on which two characters of one stage agree."""
    if l1.context_id != l2.context_id:
        raise StageMismatch("characters live at different stages")
    members = set()
    for vp in poset.downset_ids(l1.context_id):
        if restrict_element(poset, l1, vp) == restrict_element(poset, l2, vp):
            members.add(vp)
    return Sieve(l1.context_id, frozenset(members))
