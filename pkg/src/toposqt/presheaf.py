"""Set-valued presheaves over a finite context poset.

Fibre elements are opaque ids; the domain modules attach meaning.  This keeps
the machinery generic enough to serve the spectral presheaf, the outer and
dual presheaves, and record-valued structures alike.

All sieve statements are relative to the declared finite sub-poset.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Tuple

from .context import ContextPoset
from .errors import (
    ContextNotInPoset,
    ElementNotInFibre,
    NotASubcontext,
    StageMismatch,
    ValidationError,
)


@dataclass(frozen=True)
class Sieve:
    """A downward-closed set of context ids at (and below) a stage."""

    stage: str
    members: FrozenSet[str]

    def __contains__(self, cid: str) -> bool:
        return cid in self.members

    def sorted_members(self) -> List[str]:
        return sorted(self.members)


def validate_sieve(poset: ContextPoset, s: Sieve) -> None:
    down = set(poset.downset_ids(s.stage))
    if not s.members <= down:
        raise ValidationError("sieve member outside the stage's downset")
    for m in s.members:
        if not set(poset.downset_ids(m)) <= s.members:
            raise ValidationError("sieve is not downward closed at %s" % m)


def principal_sieve(poset: ContextPoset, stage: str) -> Sieve:
    return Sieve(stage, frozenset(poset.downset_ids(stage)))


def empty_sieve(stage: str) -> Sieve:
    return Sieve(stage, frozenset())


@dataclass(frozen=True)
class Violation:
    """First functoriality failure found while validating a presheaf."""

    kind: str
    chain: tuple
    detail: str = ""

    def __str__(self):
        return "%s violation on chain %s %s" % (self.kind, " > ".join(self.chain), self.detail)


class FinitePresheaf:
    """Fibres and restriction maps over a ContextPoset.

    fibre: id -> tuple of hashable elements.
    restriction: (child_id, parent_id) -> dict mapping fibre(parent) into
    fibre(child), for every strict comparable pair.
    """

    def __init__(self, poset: ContextPoset, fibre: Dict[str, tuple],
                 restriction: Dict[Tuple[str, str], Dict]):
        self.poset = poset
        self.fibre = {k: tuple(v) for k, v in sorted(fibre.items())}
        self.restriction = dict(restriction)

    def restrict(self, x, parent: str, child: str):
        """Image of x in fibre(parent) under the map down to child."""
        if child == parent:
            return x
        try:
            return self.restriction[(child, parent)][x]
        except KeyError:
            raise ElementNotInFibre("%r has no restriction from %s to %s" % (x, parent, child))

    def total_fibre_count(self) -> int:
        return sum(len(v) for v in self.fibre.values())


def validate(p: FinitePresheaf) -> Optional[Violation]:
    """Check totality, identity and the composition law; None means ok."""
    poset = p.poset
    for cid in poset.ids():
        if cid not in p.fibre:
            return Violation("fibre", (cid,), "missing fibre")
    for child, parent in poset.comparable_pairs():
        rmap = p.restriction.get((child, parent))
        if rmap is None:
            return Violation("restriction", (parent, child), "missing map")
        for x in p.fibre[parent]:
            if x not in rmap:
                return Violation("restriction", (parent, child), "partial map at %r" % (x,))
            if rmap[x] not in p.fibre[child]:
                return Violation("restriction", (parent, child), "image outside fibre")
    ids = poset.ids()
    for r in ids:
        for q in poset.downset_ids(r):
            if q == r:
                continue
            for s in poset.downset_ids(q):
                if s == q:
                    continue
                for x in p.fibre[r]:
                    via = p.restrict(p.restrict(x, r, q), q, s)
                    direct = p.restrict(x, r, s)
                    if via != direct:
                        return Violation("composition", (r, q, s),
                                         "element %r: %r != %r" % (x, direct, via))
    return None


class Subobject:
    """A restriction-closed choice of fibre subsets of a parent presheaf."""

    def __init__(self, parent: FinitePresheaf, selected: Dict[str, Iterable]):
        self.parent = parent
        self.selected = {cid: frozenset(selected.get(cid, ())) for cid in parent.fibre}
        self._validate()

    def _validate(self):
        for cid, sel in self.selected.items():
            if not sel <= set(self.parent.fibre[cid]):
                raise ValidationError("selected elements outside fibre at %s" % cid)
        for child, parent in self.parent.poset.comparable_pairs():
            for x in self.selected[parent]:
                if self.parent.restrict(x, parent, child) not in self.selected[child]:
                    raise ValidationError(
                        "not closed under restriction %s -> %s" % (parent, child))

    def __eq__(self, other):
        return isinstance(other, Subobject) and self.selected == other.selected

    def __hash__(self):
        return hash(tuple(sorted((k, tuple(sorted(map(repr, v)))) for k, v in self.selected.items())))


class NaturalTransformation:
    """Componentwise map between presheaves, validated for naturality."""

    def __init__(self, source: FinitePresheaf, target: FinitePresheaf,
                 components: Dict[str, Dict]):
        if source.poset is not target.poset and source.poset.ids() != target.poset.ids():
            raise ValidationError("source and target live over different posets")
        self.source = source
        self.target = target
        self.components = components
        self._validate()

    def _validate(self):
        for cid in self.source.fibre:
            comp = self.components.get(cid)
            if comp is None:
                raise ValidationError("missing component at %s" % cid)
            for x in self.source.fibre[cid]:
                if comp[x] not in self.target.fibre[cid]:
                    raise ValidationError("component image outside target fibre at %s" % cid)
        for child, parent in self.source.poset.comparable_pairs():
            for x in self.source.fibre[parent]:
                down_then_map = self.components[child][self.source.restrict(x, parent, child)]
                map_then_down = self.target.restrict(self.components[parent][x], parent, child)
                if down_then_map != map_then_down:
                    raise ValidationError(
                        "naturality square fails for %s -> %s at %r" % (parent, child, x))


_MAX_DOWNSET_FOR_SIEVES = 22


def sieves_on(poset: ContextPoset, v: str) -> List[Sieve]:
    """All sieves at stage v: the downward-closed subsets of its downset."""
    if v not in poset:
        raise ContextNotInPoset("unknown context id %r" % v)
    down = poset.downset_ids(v)
    if len(down) > _MAX_DOWNSET_FOR_SIEVES:
        raise ValidationError("downset too large for exhaustive sieve enumeration")
    below = {i: set(poset.downset_ids(i)) for i in down}
    out = []
    for r in range(len(down) + 1):
        for comb in itertools.combinations(down, r):
            s = set(comb)
            if all(below[i] <= s for i in s):
                out.append(Sieve(v, frozenset(s)))
    out.sort(key=lambda s: (len(s.members), tuple(sorted(s.members))))
    return out


def sieve_pullback(poset: ContextPoset, s: Sieve, vp: str) -> Sieve:
    """Pull back a sieve at the stage to a subcontext: downset(vp) intersect S."""
    if not poset.leq(vp, s.stage):
        raise NotASubcontext("%s is not below stage %s" % (vp, s.stage))
    return Sieve(vp, frozenset(set(poset.downset_ids(vp)) & s.members))


def sieve_heyting(poset: ContextPoset, op: str, s: Sieve, t: Optional[Sieve] = None) -> Sieve:
    """Heyting operations on sieves at a common stage.

    Implication uses the poset form: S => T at stage V is the set of V' <= V
    whose whole downset meets S only inside T.
    """
    if op in ("and", "or", "implies") and (t is None or t.stage != s.stage):
        raise StageMismatch("binary sieve operation needs two sieves at one stage")
    if op == "and":
        return Sieve(s.stage, s.members & t.members)
    if op == "or":
        return Sieve(s.stage, s.members | t.members)
    if op == "implies":
        keep = set()
        for vp in poset.downset_ids(s.stage):
            if set(poset.downset_ids(vp)) & s.members <= t.members:
                keep.add(vp)
        return Sieve(s.stage, frozenset(keep))
    if op == "not":
        return sieve_heyting(poset, "implies", s, empty_sieve(s.stage))
    raise ValidationError("unknown sieve operation %r" % op)


def global_elements(p: FinitePresheaf, stats: Optional[dict] = None) -> List[Dict[str, object]]:
    """All sections of the presheaf, by backtracking with arc-consistency pruning.

    An empty result certifies that no section exists over this finite poset.
    """
    poset = p.poset
    ids = poset.ids()
    domains: Dict[str, set] = {cid: set(p.fibre[cid]) for cid in ids}
    pairs = poset.comparable_pairs()
    if stats is not None:
        stats.setdefault("nodes", 0)
        stats.setdefault("prunes", 0)

    def propagate() -> bool:
        changed = True
        while changed:
            changed = False
            for child, parent in pairs:
                rmap = p.restriction[(child, parent)]
                images = {rmap[x] for x in domains[parent]}
                new_child = domains[child] & images
                if new_child != domains[child]:
                    domains[child] = new_child
                    changed = True
                new_parent = {x for x in domains[parent] if rmap[x] in domains[child]}
                if new_parent != domains[parent]:
                    domains[parent] = new_parent
                    changed = True
                if not domains[child] or not domains[parent]:
                    return False
        return True

    if not propagate():
        return []
    order = sorted(ids, key=lambda c: (-len(domains[c]), c))
    neighbours: Dict[str, List[Tuple[str, str, bool]]] = {cid: [] for cid in ids}
    for child, parent in pairs:
        neighbours[parent].append((child, parent, True))
        neighbours[child].append((child, parent, False))

    sections: List[Dict[str, object]] = []
    assignment: Dict[str, object] = {}

    def consistent(cid, x) -> bool:
        for child, parent, is_parent in neighbours[cid]:
            other = child if is_parent else parent
            if other not in assignment:
                continue
            rmap = p.restriction[(child, parent)]
            if is_parent:
                ok = rmap[x] == assignment[other]
            else:
                ok = rmap[assignment[other]] == x
            if not ok:
                return False
        return True

    def search(k):
        if k == len(order):
            sections.append(dict(assignment))
            return
        cid = order[k]
        for x in sorted(domains[cid], key=repr):
            if stats is not None:
                stats["nodes"] += 1
            if consistent(cid, x):
                assignment[cid] = x
                search(k + 1)
                del assignment[cid]
            elif stats is not None:
                stats["prunes"] += 1

    search(0)
    sections.sort(key=lambda sec: tuple(repr(sec[c]) for c in ids))
    return sections


def characteristic_arrow(k: Subobject) -> Callable[[str, object], Sieve]:
    """The characteristic map of a subobject: (stage, element) -> sieve.

    chi(V, x) collects the subcontexts where the restriction of x enters the
    subobject; it is downward closed by the subobject property.
    """
    parent = k.parent
    poset = parent.poset

    def chi(v: str, x) -> Sieve:
        if v not in poset:
            raise ContextNotInPoset("unknown stage %r" % v)
        if x not in parent.fibre[v]:
            raise ElementNotInFibre("%r not in fibre at %s" % (x, v))
        members = {vp for vp in poset.downset_ids(v)
                   if parent.restrict(x, v, vp) in k.selected[vp]}
        return Sieve(v, frozenset(members))

    return chi


def subobject_from_characteristic(parent: FinitePresheaf,
                                  chi: Callable[[str, object], Sieve]) -> Subobject:
    """Recover the subobject as the preimage of the principal sieves."""
    selected = {}
    for cid in parent.fibre:
        principal = frozenset(parent.poset.downset_ids(cid))
        selected[cid] = {x for x in parent.fibre[cid] if chi(cid, x).members == principal}
    return Subobject(parent, selected)
