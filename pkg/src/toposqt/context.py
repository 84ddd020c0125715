"""Finite context posets of commutative operator algebras.

A context is a unital commutative subalgebra of the d x d matrices, stored as
its partition of the identity into orthogonal minimal projections.  The poset
relation is algebra inclusion, equivalently partition refinement: V' <= V iff
every block of V' is a sum of blocks of V.

The full poset of all contexts of B(H) is a continuum; everything here works
over a finite, explicitly generated sub-poset, and reports always state the
family used.
"""
from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    ContextNotInPoset,
    DimensionMismatch,
    EmptyPoset,
    IncommensurableOperators,
    TrivialContextExcluded,
    ValidationError,
)
from .opalg import (
    DEFAULT_TOL,
    Projection,
    TolerancePolicy,
    _as_matrix,
    commutes,
    max_abs,
    proj_leq,
    spectral_decompose,
)


def _canonical_entries(mat: np.ndarray) -> np.ndarray:
    r = np.round(mat.real, 9)
    i = np.round(mat.imag, 9)
    r[r == 0.0] = 0.0  # normalize -0.0
    i[i == 0.0] = 0.0
    return r + 1j * i


def _block_sort_key(p: Projection):
    ent = _canonical_entries(p.mat)
    flat = tuple(float(x) for pair in zip(ent.real.ravel(), ent.imag.ravel()) for x in pair)
    return (p.rank, flat)


class Context:
    """A partition of the identity, canonically ordered and content-addressed."""

    __slots__ = ("dim", "blocks", "id", "is_trivial")

    def __init__(self, blocks: Sequence[Projection], tol: TolerancePolicy = DEFAULT_TOL,
                 allow_trivial: bool = False):
        blocks = sorted(blocks, key=_block_sort_key)
        if not blocks:
            raise ValidationError("a context needs at least one block")
        dim = blocks[0].dim
        acc = np.zeros((dim, dim), dtype=complex)
        for a, b in itertools.combinations(blocks, 2):
            if max_abs(a.mat @ b.mat) >= tol.eps_matrix * 100:
                raise ValidationError("context blocks are not pairwise orthogonal")
        for b in blocks:
            acc = acc + b.mat
        if max_abs(acc - np.eye(dim)) >= tol.eps_matrix * 100:
            raise ValidationError("context blocks do not sum to the identity")
        if len(blocks) < 2 and not allow_trivial:
            raise TrivialContextExcluded(
                "the trivial one-block context is excluded by default"
            )
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "blocks", tuple(blocks))
        object.__setattr__(self, "id", self._make_id(blocks))
        object.__setattr__(self, "is_trivial", len(blocks) == 1)

    def __setattr__(self, name, value):
        raise AttributeError("Context is immutable")

    @staticmethod
    def _make_id(blocks: Sequence[Projection]) -> str:
        h = hashlib.sha256()
        for b in blocks:
            ent = _canonical_entries(b.mat)
            h.update(ent.real.tobytes())
            h.update(ent.imag.tobytes())
        return h.hexdigest()[:16]

    def __eq__(self, other):
        return isinstance(other, Context) and self.id == other.id

    def __hash__(self):
        return hash(self.id)

    def __repr__(self):
        return "Context(id=%s, blocks=%d, dim=%d)" % (self.id, len(self.blocks), self.dim)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def block_sum(self, indices: Iterable[int]) -> Projection:
        acc = np.zeros((self.dim, self.dim), dtype=complex)
        for i in indices:
            acc = acc + self.blocks[i].mat
        return Projection(acc)

    def lattice_subsets(self):
        """All 2^blocks subsets of block indices, as sorted frozensets."""
        idx = range(self.n_blocks)
        out = []
        for r in range(self.n_blocks + 1):
            for comb in itertools.combinations(idx, r):
                out.append(frozenset(comb))
        return out

    def dominating_block(self, p: Projection, tol: TolerancePolicy = DEFAULT_TOL) -> Optional[int]:
        """The unique block of self dominating the projection p, if any."""
        for j, b in enumerate(self.blocks):
            if proj_leq(p, b, tol):
                return j
        return None

    def char_value(self, block: int, op, tol: TolerancePolicy = DEFAULT_TOL) -> float:
        """Evaluate the block's character on an operator in this algebra's span."""
        q = self.blocks[block]
        m = _as_matrix(op)
        return float(np.real(np.trace(q.mat @ m)) / q.rank)


def context_from_commuting(ops: Sequence, tol: TolerancePolicy = DEFAULT_TOL,
                           allow_trivial: bool = False) -> Context:
    """The context generated by mutually commuting Hermitian operators.

    Its minimal projections are the joint eigenspace projections: the common
    refinement of the individual eigenprojection partitions, computed as all
    nonzero products of one eigenprojection per operator.
    """
    mats = [_as_matrix(o) for o in ops]
    if not mats:
        raise ValidationError("need at least one operator")
    dim = mats[0].shape[0]
    for a, b in itertools.combinations(mats, 2):
        if a.shape != b.shape:
            raise DimensionMismatch("operators have different dimensions")
        if not commutes(a, b, tol):
            raise IncommensurableOperators("operators do not commute within tolerance")
    partitions = [spectral_decompose(m, tol).eigenprojections for m in mats]
    current = [np.eye(dim, dtype=complex)]
    for projs in partitions:
        nxt = []
        for blk in current:
            for p in projs:
                prod = blk @ p.mat
                if max_abs(prod) < tol.eps_matrix * 100:
                    continue
                nxt.append(prod)
        current = nxt
    blocks = [Projection(b, tol) for b in current]
    return Context(blocks, tol, allow_trivial=allow_trivial)


def is_subcontext(vp: Context, v: Context, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    """True iff every block of vp is a sum of blocks of v."""
    if vp.dim != v.dim:
        raise DimensionMismatch("contexts have different dimensions")
    assignment = []
    for j, q in enumerate(v.blocks):
        owner = None
        for i, b in enumerate(vp.blocks):
            if proj_leq(q, b, tol):
                owner = i
                break
        if owner is None:
            return False
        assignment.append(owner)
    for i, b in enumerate(vp.blocks):
        acc = np.zeros((v.dim, v.dim), dtype=complex)
        for j, owner in enumerate(assignment):
            if owner == i:
                acc = acc + v.blocks[j].mat
        if max_abs(acc - b.mat) >= tol.eps_matrix * 100:
            return False
    return True


def _set_partitions(n: int):
    """All partitions of range(n) as lists of index lists (restricted growth)."""
    if n == 0:
        yield []
        return
    codes = [0] * n

    def rec(i, maxcode):
        if i == n:
            groups: Dict[int, list] = {}
            for pos, c in enumerate(codes):
                groups.setdefault(c, []).append(pos)
            yield [groups[c] for c in sorted(groups)]
            return
        for c in range(maxcode + 2):
            codes[i] = c
            yield from rec(i + 1, max(maxcode, c))

    yield from rec(1, 0)


def coarsenings(v: Context, tol: TolerancePolicy = DEFAULT_TOL,
                include_trivial: bool = False) -> set:
    """All proper coarsenings of v's partition with >= 2 blocks.

    The trivial one-block context is appended only when include_trivial is set.
    """
    out = set()
    n = v.n_blocks
    for parts in _set_partitions(n):
        if len(parts) == n:
            continue  # v itself
        if len(parts) < 2 and not include_trivial:
            continue
        blocks = [v.block_sum(group) for group in parts]
        out.add(Context(blocks, tol, allow_trivial=True))
    return out


def context_meet(v1: Context, v2: Context, tol: TolerancePolicy = DEFAULT_TOL) -> Context:
    """The algebra intersection of two contexts (their maximal common coarsening).

    Blocks are the connected components of the overlap graph between the two
    partitions; any common coarsening coarsens the result.
    """
    if v1.dim != v2.dim:
        raise DimensionMismatch("contexts have different dimensions")
    n1 = v1.n_blocks
    parent = list(range(n1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for q2 in v2.blocks:
        touching = [i for i, q1 in enumerate(v1.blocks)
                    if max_abs(q1.mat @ q2.mat) >= tol.eps_matrix * 100]
        for i in touching[1:]:
            union(touching[0], i)
    groups: Dict[int, list] = {}
    for i in range(n1):
        groups.setdefault(find(i), []).append(i)
    blocks = [v1.block_sum(g) for g in groups.values()]
    return Context(blocks, tol, allow_trivial=True)


@dataclass(frozen=True)
class GenerationPolicy:
    """How a finite context family is generated from named seed operators.

    closure: 'none', 'coarsenings' (add every proper coarsening) or
    'pairwise_meets' (close under maximal common coarsenings of pairs).
    """

    seeds: tuple  # of (name, HermitianOperator)
    closure: str = "none"
    include_trivial: bool = False

    def __post_init__(self):
        if self.closure not in ("none", "coarsenings", "pairwise_meets"):
            raise ValidationError("closure must be none|coarsenings|pairwise_meets")


class ContextPoset:
    """A finite family of contexts with the inclusion order, validated."""

    def __init__(self, contexts: Iterable[Context], tol: TolerancePolicy = DEFAULT_TOL,
                 include_trivial: bool = False):
        byid: Dict[str, Context] = {}
        for c in contexts:
            if c.is_trivial and not include_trivial:
                raise TrivialContextExcluded("trivial context in a non-augmented poset")
            byid[c.id] = c
        if not byid:
            raise EmptyPoset("no contexts")
        dims = {c.dim for c in byid.values()}
        if len(dims) != 1:
            raise DimensionMismatch("poset mixes dimensions")
        self.contexts: Dict[str, Context] = dict(sorted(byid.items()))
        self.include_trivial = include_trivial
        self.tol = tol
        below: Dict[str, set] = {i: {i} for i in self.contexts}
        for a, b in itertools.permutations(self.contexts.values(), 2):
            if is_subcontext(a, b, tol):
                below[b.id].add(a.id)
        self._below = {k: frozenset(v) for k, v in below.items()}
        self._validate_order()

    def _validate_order(self):
        ids = list(self.contexts)
        for a in ids:
            if a not in self._below[a]:
                raise ValidationError("order is not reflexive")
        for a in ids:
            for b in self._below[a]:
                if a != b and a in self._below[b]:
                    raise ValidationError("order is not antisymmetric")
                for c in self._below[b]:
                    if c not in self._below[a]:
                        raise ValidationError("order is not transitive")

    def __contains__(self, cid: str) -> bool:
        return cid in self.contexts

    def __len__(self) -> int:
        return len(self.contexts)

    @property
    def dim(self) -> int:
        return next(iter(self.contexts.values())).dim

    def context(self, cid: str) -> Context:
        if cid not in self.contexts:
            raise ContextNotInPoset("unknown context id %r" % cid)
        return self.contexts[cid]

    def leq(self, a: str, b: str) -> bool:
        """True iff context a is a subcontext of (coarser than) context b."""
        if a not in self.contexts or b not in self.contexts:
            raise ContextNotInPoset("unknown context id")
        return a in self._below[b]

    def downset_ids(self, cid: str) -> List[str]:
        """Everything <= cid, in descending block count, then id."""
        if cid not in self.contexts:
            raise ContextNotInPoset("unknown context id %r" % cid)
        ids = list(self._below[cid])
        ids.sort(key=lambda i: (-self.contexts[i].n_blocks, i))
        return ids

    def comparable_pairs(self) -> List[Tuple[str, str]]:
        """All strict pairs (child, parent) with child < parent."""
        out = []
        for parent, kids in self._below.items():
            for child in kids:
                if child != parent:
                    out.append((child, parent))
        return sorted(out)

    def ids(self) -> List[str]:
        return list(self.contexts)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for cid in self.contexts:
            h.update(cid.encode())
        for a, b in self.comparable_pairs():
            h.update(("%s<%s" % (a, b)).encode())
        return h.hexdigest()[:16]


def downset(poset: ContextPoset, v: Context) -> List[Context]:
    return [poset.contexts[i] for i in poset.downset_ids(v.id)]


def _maximal_commuting_subsets(mats: List[np.ndarray], tol: TolerancePolicy) -> List[List[int]]:
    n = len(mats)
    compat = [[i != j and commutes(mats[i], mats[j], tol) for j in range(n)] for i in range(n)]
    cliques = []

    def bron(r, p, x):
        if not p and not x:
            cliques.append(sorted(r))
            return
        for v in list(p):
            bron(r | {v}, {u for u in p if compat[v][u]}, {u for u in x if compat[v][u]})
            p = p - {v}
            x = x | {v}

    bron(set(), set(range(n)), set())
    return sorted(cliques)


def build_poset(policy: GenerationPolicy, tol: TolerancePolicy = DEFAULT_TOL) -> ContextPoset:
    """Generate the declared finite context family.

    Contexts come from the maximal mutually-commuting subsets of the seeds,
    closed per the policy and deduplicated by canonical id.
    """
    named = list(policy.seeds)
    mats = [_as_matrix(op) for _, op in named]
    contexts: Dict[str, Context] = {}
    for clique in _maximal_commuting_subsets(mats, tol):
        try:
            c = context_from_commuting([mats[i] for i in clique], tol,
                                       allow_trivial=policy.include_trivial)
        except TrivialContextExcluded:
            continue
        if c.is_trivial and not policy.include_trivial:
            continue
        contexts[c.id] = c
    if policy.closure == "coarsenings":
        for c in list(contexts.values()):
            for coarse in coarsenings(c, tol, include_trivial=policy.include_trivial):
                contexts[coarse.id] = coarse
    elif policy.closure == "pairwise_meets":
        changed = True
        while changed:
            changed = False
            current = list(contexts.values())
            for a, b in itertools.combinations(current, 2):
                m = context_meet(a, b, tol)
                if m.is_trivial and not policy.include_trivial:
                    continue
                if m.id not in contexts:
                    contexts[m.id] = m
                    changed = True
    if policy.include_trivial:
        dim = mats[0].shape[0] if mats else 0
        if dim:
            triv = Context([Projection(np.eye(dim, dtype=complex))], tol, allow_trivial=True)
            contexts[triv.id] = triv
    if not contexts:
        raise EmptyPoset("generation produced no valid contexts")
    return ContextPoset(contexts.values(), tol, include_trivial=policy.include_trivial)


def span_membership_residual(op, v: Context) -> float:
    """Least-squares residual of projecting op onto the span of v's blocks.

    Brute-force oracle used by tests: vp <= v iff every operator built on vp's
    blocks lies in the span of v's blocks.
    """
    m = _as_matrix(op)
    basis = np.stack([b.mat.ravel() for b in v.blocks], axis=1)
    target = m.ravel()
    coef, *_ = np.linalg.lstsq(basis, target, rcond=None)
    return float(np.max(np.abs(basis @ coef - target)))
