"""Truth objects, pseudo-states, sieve-valued truth values, filters and the
observable/antonymous functions.

A truth object localises the quasi-point of a state at every context: its
fibre at V is the filter of projections in P(V) carrying probability one.
The pseudo-state is the outer daseinisation of the state's rank-1 projector;
membership in the truth object is dominance over the pseudo-state.

Filters in a finite context lattice are principal, so a filter is stored by
its minimal projection; the cone into the full projection set keeps the same
generator and widens the dominance test.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

import numpy as np

from .context import Context, ContextPoset
from .dasein import clopen_subobject, outer_das_proj
from .errors import (
    ContextNotInPoset,
    EmptyFilter,
    ValidationError,
)
from .opalg import (
    DEFAULT_TOL,
    DensityMatrix,
    Projection,
    StateVector,
    TolerancePolicy,
    _as_matrix,
    expectation,
    proj_leq,
    spectral_family,
)
from .presheaf import FinitePresheaf, Sieve, Subobject

State = Union[StateVector, DensityMatrix]


class Filter:
    """A proper filter, stored by its minimal projection.

    In a finite lattice every upward-closed, meet-closed proper subset has a
    minimum, so this representation is lossless.  scope is the context whose
    lattice the filter lives in, or None for a filter in the full projection
    set (a cone, or a quasi-point).
    """

    __slots__ = ("min_proj", "scope", "tol")

    def __init__(self, min_proj: Projection, scope: Optional[Context] = None,
                 tol: TolerancePolicy = DEFAULT_TOL):
        if min_proj.rank == 0:
            raise EmptyFilter("a proper filter cannot contain the zero projection")
        object.__setattr__(self, "min_proj", min_proj)
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "tol", tol)

    def __setattr__(self, name, value):
        raise AttributeError("Filter is immutable")

    def contains(self, P) -> bool:
        return proj_leq(self.min_proj, P, self.tol)

    def elements(self) -> List[Projection]:
        """All members, only available for a context-scoped filter."""
        if self.scope is None:
            raise ValidationError("a cone has no finite element listing")
        out = []
        for subset in self.scope.lattice_subsets():
            cand = self.scope.block_sum(subset)
            if self.contains(cand):
                out.append(cand)
        return out


class QuasiPoint(Filter):
    """The maximal filter of projections dominating a rank-1 state projector."""

    __slots__ = ("psi",)

    def __init__(self, psi: StateVector, tol: TolerancePolicy = DEFAULT_TOL):
        super().__init__(psi.projector(), None, tol)
        object.__setattr__(self, "psi", psi)

    def contains(self, P) -> bool:
        m = _as_matrix(P)
        return float(np.linalg.norm(m @ self.psi.vec - self.psi.vec)) < self.tol.eps_matrix * 1e3


def cone(f: Filter) -> Filter:
    """The upward closure of a context filter in the full projection set."""
    return Filter(f.min_proj, None, f.tol)


def filters_of_context(v: Context, tol: TolerancePolicy = DEFAULT_TOL) -> List[Filter]:
    """All (proper) filters of the context's projection lattice."""
    out = []
    for subset in v.lattice_subsets():
        if not subset:
            continue
        out.append(Filter(v.block_sum(subset), v, tol))
    return out


class TruthObject:
    """Per-context filters of probability-one projections, as block subsets."""

    def __init__(self, fibres: Dict[str, FrozenSet[FrozenSet[int]]], poset: ContextPoset,
                 degenerate: bool = False):
        self.fibres = fibres
        self.poset = poset
        self.degenerate = degenerate

    def contains(self, cid: str, block_subset: FrozenSet[int]) -> bool:
        return block_subset in self.fibres[cid]

    def projection(self, cid: str, block_subset: FrozenSet[int]) -> Projection:
        return self.poset.contexts[cid].block_sum(block_subset)


def truth_object(state: State, poset: ContextPoset,
                 tol: TolerancePolicy = DEFAULT_TOL) -> TruthObject:
    """The probability-one filter at every context, validated as a subobject
    of the outer presheaf (outer daseinisation maps fibres into fibres).

    Vector states are recoverable from their truth objects; density matrices
    are not, in general (distinct mixtures with the same support produce the
    same filters), so mixed-state truth objects carry less information.
    """
    fibres: Dict[str, FrozenSet[FrozenSet[int]]] = {}
    degenerate = False
    for cid in poset.ids():
        v = poset.contexts[cid]
        members = set()
        for subset in v.lattice_subsets():
            p = v.block_sum(subset)
            if expectation(state, p, tol) >= 1.0 - tol.eps_prob:
                members.add(subset)
        if frozenset() in members:
            degenerate = True
        fibres[cid] = frozenset(members)
    to = TruthObject(fibres, poset, degenerate)
    _validate_truth_object(to, poset, tol)
    return to


def _validate_truth_object(to: TruthObject, poset: ContextPoset, tol: TolerancePolicy):
    for cid, members in to.fibres.items():
        v = poset.contexts[cid]
        for a in members:
            for b in members:
                if frozenset(a & b) not in members:
                    raise ValidationError("truth-object fibre not meet closed at %s" % cid)
            for other in v.lattice_subsets():
                if a <= other and other not in members:
                    raise ValidationError("truth-object fibre not upward closed at %s" % cid)
    for child, parent in poset.comparable_pairs():
        vc = poset.contexts[child]
        for subset in to.fibres[parent]:
            p = to.projection(parent, subset)
            das = outer_das_proj(p, vc, tol)
            img = frozenset(j for j, q in enumerate(vc.blocks) if proj_leq(q, das, tol))
            if img not in to.fibres[child]:
                raise ValidationError("truth object not restriction compatible")


@dataclass(frozen=True)
class PseudoState:
    """Outer daseinisation of the state's projector: the projection-valued
    section and the matching clopen subobject of the spectral presheaf."""

    section: Dict[str, Projection]
    subobject: Subobject
    psi: StateVector


def pseudo_state(psi: StateVector, poset: ContextPoset,
                 tol: TolerancePolicy = DEFAULT_TOL,
                 sigma: Optional[FinitePresheaf] = None) -> PseudoState:
    proj = psi.projector()
    section = {cid: outer_das_proj(proj, poset.contexts[cid], tol) for cid in poset.ids()}
    for cid, p in section.items():
        if p.rank == 0:
            raise ValidationError("pseudo-state empty at context %s" % cid)
    sub = clopen_subobject(proj, poset, "outer", tol, sigma)
    return PseudoState(section, sub, psi)


def recover_truth_fibres(w: PseudoState, poset: ContextPoset,
                         tol: TolerancePolicy = DEFAULT_TOL) -> Dict[str, FrozenSet[FrozenSet[int]]]:
    """The truth object recovered as the upper sets over the pseudo-state."""
    fibres = {}
    for cid in poset.ids():
        v = poset.contexts[cid]
        members = {s for s in v.lattice_subsets()
                   if proj_leq(w.section[cid], v.block_sum(s), tol)}
        fibres[cid] = frozenset(members)
    return fibres


def truth_value(P, state: State, v: str, poset: ContextPoset,
                tol: TolerancePolicy = DEFAULT_TOL) -> Sieve:
    """Sieve of subcontexts where the daseinised proposition has probability one."""
    if v not in poset:
        raise ContextNotInPoset("stage %r not in poset" % v)
    members = set()
    for vp in poset.downset_ids(v):
        das = outer_das_proj(P, poset.contexts[vp], tol)
        if expectation(state, das, tol) >= 1.0 - tol.eps_prob:
            members.add(vp)
    return Sieve(v, frozenset(members))


def truth_value_via_pseudo_state(P, w: PseudoState, v: str, poset: ContextPoset,
                                 tol: TolerancePolicy = DEFAULT_TOL) -> Sieve:
    """The subset formulation: stages where the pseudo-state sits inside the
    daseinised subobject."""
    if v not in poset:
        raise ContextNotInPoset("stage %r not in poset" % v)
    members = set()
    for vp in poset.downset_ids(v):
        das = outer_das_proj(P, poset.contexts[vp], tol)
        if proj_leq(w.section[vp], das, tol):
            members.add(vp)
    return Sieve(v, frozenset(members))


def tolerance_flags(P, state: State, v: str, poset: ContextPoset,
                    tol: TolerancePolicy = DEFAULT_TOL) -> Dict[str, Dict[str, object]]:
    """Subcontexts whose expectation sits near the probability-one boundary.

    The sieve is discontinuous in the state, so any expectation within
    10*eps_prob of 1 (but not essentially exact) is reported for auditing,
    whether it passed or failed the membership test.
    """
    flags: Dict[str, Dict[str, object]] = {}
    for vp in poset.downset_ids(v):
        das = outer_das_proj(P, poset.contexts[vp], tol)
        e = expectation(state, das, tol)
        gap = abs(e - 1.0)
        if tol.eps_prob / 10 < gap < 10 * tol.eps_prob:
            flags[vp] = {"expectation": e, "in_sieve": e >= 1.0 - tol.eps_prob}
    return flags


def observable_fn(A, f: Filter, tol: TolerancePolicy = DEFAULT_TOL) -> float:
    """inf of the spectral-family entry times contained in the filter."""
    fam = spectral_family(_as_matrix(A), tol)
    for lam, cum in zip(fam.jumps, fam.cumulative):
        if f.contains(cum):
            return float(lam)
    raise EmptyFilter("filter contains no spectral projection (not proper?)")


def antonymous_fn(A, f: Filter, tol: TolerancePolicy = DEFAULT_TOL) -> float:
    """sup of the times whose complement spectral projection is in the filter.

    Membership of 1 - E_lambda is downward closed in lambda, so the sup is the
    first jump where it fails; the final complement is 0, so a failure exists.
    """
    m = _as_matrix(A)
    fam = spectral_family(m, tol)
    dim = m.shape[0]
    eye = np.eye(dim, dtype=complex)
    for lam, cum in zip(fam.jumps, fam.cumulative):
        if not f.contains(Projection(eye - cum.mat, tol)):
            return float(lam)
    raise EmptyFilter("filter unexpectedly contains the zero projection")


def expectation_bracket(A, psi: StateVector,
                        tol: TolerancePolicy = DEFAULT_TOL) -> Tuple[float, float, float]:
    """(antonymous, mean, observable) at the state's quasi-point; the bracket
    collapses to the eigenvalue exactly on eigenstates."""
    t = QuasiPoint(psi, tol)
    g = antonymous_fn(A, t, tol)
    fv = observable_fn(A, t, tol)
    mean = expectation(psi, A, tol)
    return (g, mean, fv)
