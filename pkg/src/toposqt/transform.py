"""Unitary covariance and composite-system translations.

Conjugation by a unitary acts on contexts blockwise and realizes the unitary
group on the context poset; daseinisation commutes with this action, and so
do the sieve-valued truth values (after relabelling stages).

For composites, the direct-sum translation embeds a factor context as
V + C1 and block-diagonal daseinisation splits along the summands.  For
tensor products the floor of a composite context W is the largest factor
algebra V_W with V_W x 1 inside W's span; translating an operator through the
floor and daseinising directly agree on embedded contexts but can differ on
entangled ones, and the gap search looks for such witnesses.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .context import Context, ContextPoset, context_from_commuting
from .dasein import inner_das_proj, outer_das_proj, outer_das_sa
from .errors import (
    DimensionMismatch,
    NonMonotoneMap,
    NonUnitaryInput,
    PosetNotClosedUnderU,
    ValidationError,
)
from .opalg import (
    DEFAULT_TOL,
    Projection,
    StateVector,
    TolerancePolicy,
    _as_matrix,
    matrices_equal,
    max_abs,
    spectral_decompose,
)
from .presheaf import FinitePresheaf
from .truth import truth_value


class UnitaryOperator:
    """A validated unitary matrix."""

    __slots__ = ("mat", "dim")

    def __init__(self, mat, tol: TolerancePolicy = DEFAULT_TOL):
        m = np.array(np.asarray(mat, dtype=complex))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise NonUnitaryInput("unitary must be a square matrix")
        if max_abs(m @ m.conj().T - np.eye(m.shape[0])) >= tol.eps_matrix * 100:
            raise NonUnitaryInput("matrix is not unitary within tolerance")
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)
        object.__setattr__(self, "dim", m.shape[0])

    def __setattr__(self, name, value):
        raise AttributeError("UnitaryOperator is immutable")


class MonotoneMap:
    """An order-preserving map between context posets, stored on ids."""

    def __init__(self, source: ContextPoset, target: ContextPoset,
                 mapping: Dict[str, str]):
        for cid in source.ids():
            if cid not in mapping or mapping[cid] not in target.contexts:
                raise NonMonotoneMap("mapping must send every source context into the target")
        for child, parent in source.comparable_pairs():
            if not target.leq(mapping[child], mapping[parent]):
                raise NonMonotoneMap("map does not preserve order on (%s, %s)" % (child, parent))
        self.source = source
        self.target = target
        self.mapping = dict(mapping)

    def __call__(self, cid: str) -> str:
        return self.mapping[cid]


def ell_U(u: UnitaryOperator, v: Context, tol: TolerancePolicy = DEFAULT_TOL) -> Context:
    """Conjugate a context blockwise."""
    if u.dim != v.dim:
        raise DimensionMismatch("unitary and context dimensions differ")
    blocks = [Projection(u.mat @ q.mat @ u.mat.conj().T, tol) for q in v.blocks]
    return Context(blocks, tol, allow_trivial=v.is_trivial)


def ell_U_poset_map(u: UnitaryOperator, poset: ContextPoset,
                    tol: TolerancePolicy = DEFAULT_TOL) -> MonotoneMap:
    """The action of a unitary on a U-closed poset, as a monotone map."""
    mapping = {}
    for cid in poset.ids():
        img = ell_U(u, poset.contexts[cid], tol)
        if img.id not in poset.contexts:
            raise PosetNotClosedUnderU("image of %s leaves the poset" % cid)
        mapping[cid] = img.id
    return MonotoneMap(poset, poset, mapping)


def covariance_check(P, u: UnitaryOperator, v: Context,
                     tol: TolerancePolicy = DEFAULT_TOL) -> Optional[Dict[str, np.ndarray]]:
    """Outer daseinisation commutes with conjugation; None means ok, else a
    discrepancy record with both sides."""
    lhs = u.mat @ outer_das_proj(P, v, tol).mat @ u.mat.conj().T
    rhs = outer_das_proj(u.mat @ _as_matrix(P) @ u.mat.conj().T, ell_U(u, v, tol), tol).mat
    if matrices_equal(lhs, rhs, tol.eps_matrix * 100):
        return None
    return {"lhs": lhs, "rhs": rhs}


def truth_covariance_check(P, u: UnitaryOperator, psi: StateVector, v: str,
                           poset: ContextPoset,
                           tol: TolerancePolicy = DEFAULT_TOL) -> Optional[Dict[str, list]]:
    """Sieve-level covariance: the truth value of the conjugated proposition in
    the transformed state, at the transformed stage, is the relabelled sieve."""
    ell = ell_U_poset_map(u, poset, tol)
    upsi = StateVector(u.mat @ psi.vec, tol)
    up = u.mat @ _as_matrix(P) @ u.mat.conj().T
    original = truth_value(P, psi, v, poset, tol)
    transformed = truth_value(up, upsi, ell(v), poset, tol)
    relabelled = frozenset(ell(m) for m in original.members)
    if transformed.members == relabelled:
        return None
    return {"lhs": sorted(transformed.members), "rhs": sorted(relabelled)}


def das_unitary(u: UnitaryOperator, v: Context,
                tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """Outer daseinisation of a unitary through its phase spectral family.

    Phases are taken in (-pi, pi]; the cumulative phase projections are
    inner-daseinised and the step function of e^{i phase} is integrated.
    The result is unitary and lies in the context's span.
    """
    if u.dim != v.dim:
        raise DimensionMismatch("unitary and context dimensions differ")
    w, vecs = np.linalg.eig(u.mat)
    phases = np.angle(w)
    phases[phases <= -np.pi + 1e-12] = np.pi  # fold -pi to +pi
    order = np.argsort(phases)
    clusters: List[List[int]] = []
    for idx in order:
        if clusters and phases[idx] - phases[clusters[-1][-1]] <= tol.eps_eig:
            clusters[-1].append(idx)
        else:
            clusters.append([idx])
    prev = np.zeros((v.dim, v.dim), dtype=complex)
    acc = np.zeros((v.dim, v.dim), dtype=complex)
    running = np.zeros((v.dim, v.dim), dtype=complex)
    for group in clusters:
        cols = vecs[:, group]
        q, _ = np.linalg.qr(cols)  # eig of a unitary may return non-orthonormal columns
        running = running + q @ q.conj().T
        cur = inner_das_proj(Projection(running, tol), v, tol).mat
        phase = float(np.mean(phases[group]))
        acc = acc + np.exp(1j * phase) * (cur - prev)
        prev = cur
    if max_abs(acc @ acc.conj().T - np.eye(v.dim)) >= tol.eps_matrix * 1e3:
        raise NonUnitaryInput("daseinised unitary failed the unitarity check")
    return acc


def direct_sum(a, b) -> np.ndarray:
    ma, mb = _as_matrix(a), _as_matrix(b)
    out = np.zeros((ma.shape[0] + mb.shape[0],) * 2, dtype=complex)
    out[: ma.shape[0], : ma.shape[0]] = ma
    out[ma.shape[0]:, ma.shape[0]:] = mb
    return out


def embed_context_direct_sum(v: Context, dim2: int,
                             tol: TolerancePolicy = DEFAULT_TOL) -> Context:
    """m(V) = V + C1: the factor blocks padded by zero plus the other summand."""
    d = v.dim + dim2
    blocks = []
    for q in v.blocks:
        blocks.append(Projection(direct_sum(q.mat, np.zeros((dim2, dim2))), tol))
    other = np.zeros((d, d), dtype=complex)
    other[v.dim:, v.dim:] = np.eye(dim2)
    blocks.append(Projection(other, tol))
    return Context(blocks, tol)


@dataclass(frozen=True)
class DirectSumCheck:
    """Outcome of the direct-sum translation identities for one context."""

    m_context_id: str
    translated: np.ndarray
    expected: np.ndarray
    ok: bool
    blockwise_ok: Optional[bool]
    arrow_ok: bool


def direct_sum_translate(A1, A2, v: Context, tol: TolerancePolicy = DEFAULT_TOL,
                         v2: Optional[Context] = None) -> DirectSumCheck:
    """Check the translation identities for a block-diagonal operator.

    At m(V) = V + C1 the daseinisation splits into the factor daseinisation
    and the top eigenvalue of the other summand.  When a second-factor context
    is supplied the blockwise identity over V1 + V2 is checked as well.  The
    arrow-level identity compares values of the pulled-back arrow with the
    factor arrow on every character of V.
    """
    m1, m2 = _as_matrix(A1), _as_matrix(A2)
    if m1.shape[0] != v.dim:
        raise DimensionMismatch("operator and context dimensions differ")
    big = direct_sum(m1, m2)
    mv = embed_context_direct_sum(v, m2.shape[0], tol)
    translated = outer_das_sa(big, mv, tol).mat
    top = float(max(spectral_decompose(m2, tol).eigenvalues))
    expected = direct_sum(outer_das_sa(m1, v, tol).mat, top * np.eye(m2.shape[0]))
    ok = matrices_equal(translated, expected, tol.eps_eig)

    blockwise_ok = None
    if v2 is not None:
        blocks = [Projection(direct_sum(q.mat, np.zeros((m2.shape[0],) * 2)), tol)
                  for q in v.blocks]
        blocks += [Projection(direct_sum(np.zeros((m1.shape[0],) * 2), q.mat), tol)
                   for q in v2.blocks]
        vsum = Context(blocks, tol)
        lhs = outer_das_sa(big, vsum, tol).mat
        rhs = direct_sum(outer_das_sa(m1, v, tol).mat, outer_das_sa(m2, v2, tol).mat)
        blockwise_ok = matrices_equal(lhs, rhs, tol.eps_eig)

    # arrow-level: the character of each factor block evaluates the translated
    # operator exactly as it evaluates the factor daseinisation.
    arrow_ok = True
    fac = outer_das_sa(m1, v, tol).mat
    for q in v.blocks:
        embedded = direct_sum(q.mat, np.zeros((m2.shape[0],) * 2))
        lhs_val = float(np.real(np.trace(embedded @ translated)) / q.rank)
        rhs_val = float(np.real(np.trace(q.mat @ fac)) / q.rank)
        if abs(lhs_val - rhs_val) >= tol.eps_eig:
            arrow_ok = False
    return DirectSumCheck(mv.id, translated, expected, ok, blockwise_ok, arrow_ok)


def tensor_product_context(v1: Context, v2: Context,
                           tol: TolerancePolicy = DEFAULT_TOL) -> Context:
    blocks = [Projection(np.kron(a.mat, b.mat), tol) for a in v1.blocks for b in v2.blocks]
    return Context(blocks, tol)


def embed_context_tensor(v1: Context, dim2: int,
                         tol: TolerancePolicy = DEFAULT_TOL) -> Context:
    blocks = [Projection(np.kron(q.mat, np.eye(dim2)), tol) for q in v1.blocks]
    return Context(blocks, tol)


def tensor_floor(w: Context, dim1: int, dim2: int,
                 tol: TolerancePolicy = DEFAULT_TOL) -> Optional[Context]:
    """The largest first-factor algebra embedding into the span of w's blocks.

    Solves the linear membership system X x 1 = sum_j c_j B_j: the null space
    of the joint constraint matrix projects onto the admissible X, which form
    a commutative unital *-algebra; its partition is returned, or None when
    only scalars embed (the trivial floor).
    """
    if w.dim != dim1 * dim2:
        raise DimensionMismatch("composite context dimension mismatch")
    nb = w.n_blocks
    rows = (dim1 * dim2) ** 2
    cols = dim1 * dim1 + nb
    m = np.zeros((rows, cols), dtype=complex)
    eye2 = np.eye(dim2, dtype=complex)
    for a in range(dim1):
        for b in range(dim1):
            unit = np.zeros((dim1, dim1), dtype=complex)
            unit[a, b] = 1.0
            m[:, a * dim1 + b] = np.kron(unit, eye2).ravel()
    for j, blk in enumerate(w.blocks):
        m[:, dim1 * dim1 + j] = -blk.mat.ravel()
    _, s, vh = np.linalg.svd(m)
    ns = [vh[i].conj() for i in range(vh.shape[0])
          if i >= len(s) or s[i] < 1e-9]
    xs = []
    for vec in ns:
        x = vec[: dim1 * dim1].reshape(dim1, dim1)
        if max_abs(x) > 1e-9:
            xs.append(x)
    herm = []
    for x in xs:
        herm.append((x + x.conj().T) / 2)
        herm.append((x - x.conj().T) / 2j)
    herm = [h for h in herm if max_abs(h) > 1e-8]
    if not herm:
        return None
    nonscalar = [h for h in herm
                 if max_abs(h - np.trace(h) / dim1 * np.eye(dim1)) > 1e-8]
    if not nonscalar:
        return None
    return context_from_commuting(nonscalar, tol)


def tensor_translate(A1, w: Context, dim1: int, dim2: int,
                     tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """Translate a first-factor operator through the floor of a composite
    context: daseinise to the floor, then embed."""
    m1 = _as_matrix(A1)
    floor = tensor_floor(w, dim1, dim2, tol)
    if floor is None:
        top = float(max(spectral_decompose(m1, tol).eigenvalues))
        return top * np.eye(dim1 * dim2, dtype=complex)
    return np.kron(outer_das_sa(m1, floor, tol).mat, np.eye(dim2))


@dataclass(frozen=True)
class CompositeScenario:
    """Bookkeeping for a declared composite: the factor dimensions, the factor
    posets, the composite poset, and the embedding of first-factor contexts.

    kind is 'tensor' or 'direct_sum'; embedding maps each first-factor context
    id to its image context id in the composite poset.
    """

    kind: str
    factor_dims: Tuple[int, int]
    factor_posets: Tuple[ContextPoset, ContextPoset]
    composite_poset: ContextPoset
    embedding: Dict[str, str]

    def __post_init__(self):
        d = self.factor_dims[0] * self.factor_dims[1] if self.kind == "tensor" \
            else self.factor_dims[0] + self.factor_dims[1]
        if self.composite_poset.dim != d:
            raise DimensionMismatch("composite poset has the wrong dimension")
        for src, dst in self.embedding.items():
            if src not in self.factor_posets[0].contexts:
                raise ValidationError("embedding source %s not a factor context" % src)
            if dst not in self.composite_poset.contexts:
                raise ValidationError("embedding image %s not a composite context" % dst)


def tensor_composite_scenario(p1: ContextPoset, p2: ContextPoset,
                              entangled: Tuple[Context, ...] = (),
                              tol: TolerancePolicy = DEFAULT_TOL) -> CompositeScenario:
    """Assemble the declared tensor composite: embedded first-factor contexts,
    all products, embedded second-factor contexts, plus entangled seeds."""
    d1, d2 = p1.dim, p2.dim
    contexts = []
    embedding = {}
    for cid1 in p1.ids():
        v1 = p1.contexts[cid1]
        emb = embed_context_tensor(v1, d2, tol)
        embedding[cid1] = emb.id
        contexts.append(emb)
        for cid2 in p2.ids():
            contexts.append(tensor_product_context(v1, p2.contexts[cid2], tol))
    for cid2 in p2.ids():
        blocks = [Projection(np.kron(np.eye(d1), q.mat), tol)
                  for q in p2.contexts[cid2].blocks]
        contexts.append(Context(blocks, tol))
    contexts.extend(entangled)
    composite = ContextPoset(contexts, tol)
    return CompositeScenario("tensor", (d1, d2), (p1, p2), composite, embedding)


@dataclass(frozen=True)
class GapRecord:
    """Comparison of direct daseinisation against the floor translation."""

    context_id: str
    floor_id: Optional[str]
    direct: np.ndarray
    translated: np.ndarray
    gap: float


def translation_gap_witness(A1, poset: ContextPoset, dim1: int, dim2: int,
                            tol: TolerancePolicy = DEFAULT_TOL
                            ) -> Tuple[Optional[GapRecord], List[GapRecord]]:
    """Search the composite poset for a context where translating through the
    floor differs from daseinising the embedded operator directly.

    Returns (first witness or None, all comparison records).
    """
    m1 = _as_matrix(A1)
    big = np.kron(m1, np.eye(dim2))
    records: List[GapRecord] = []
    witness: Optional[GapRecord] = None
    for cid in poset.ids():
        w = poset.contexts[cid]
        direct = outer_das_sa(big, w, tol).mat
        translated = tensor_translate(m1, w, dim1, dim2, tol)
        floor = tensor_floor(w, dim1, dim2, tol)
        gap = max_abs(direct - translated)
        rec = GapRecord(cid, floor.id if floor is not None else None,
                        direct, translated, gap)
        records.append(rec)
        if gap > tol.eps_eig and witness is None:
            witness = rec
    return witness, records


def floor_monotonicity_check(poset: ContextPoset, dim1: int, dim2: int,
                             tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    """W' inside W implies floor(W') inside floor(W); trivial floors count as
    below everything."""
    floors = {cid: tensor_floor(poset.contexts[cid], dim1, dim2, tol)
              for cid in poset.ids()}
    from .context import is_subcontext

    for child, parent in poset.comparable_pairs():
        fc, fp = floors[child], floors[parent]
        if fc is None:
            continue
        if fp is None:
            return False
        if not (fc.id == fp.id or is_subcontext(fc, fp, tol)):
            return False
    return True


def inverse_image(m: MonotoneMap, p: FinitePresheaf) -> FinitePresheaf:
    """Pull a presheaf back along a monotone map: fibres and restrictions are
    read off at the image contexts."""
    if p.poset is not m.target and p.poset.ids() != m.target.ids():
        raise ValidationError("presheaf does not live over the map's target")
    fibre = {cid: p.fibre[m(cid)] for cid in m.source.ids()}
    restriction = {}
    for child, parent in m.source.comparable_pairs():
        tc, tp = m(child), m(parent)
        if tc == tp:
            restriction[(child, parent)] = {x: x for x in fibre[parent]}
        else:
            restriction[(child, parent)] = dict(p.restriction[(tc, tp)])
    out = FinitePresheaf(m.source, fibre, restriction)
    from .presheaf import validate

    v = validate(out)
    if v is not None:
        raise ValidationError("pulled-back presheaf failed validation: %s" % v)
    return out
