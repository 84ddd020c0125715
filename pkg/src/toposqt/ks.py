"""Kochen-Specker machinery: witness posets, global-section search, the dual
presheaf over Boolean subalgebras, and valuation checks.

A witness set is a family of rays and orthonormal bases.  Its poset has one
maximal context per basis and one two-block context per ray; a global section
of the spectral presheaf over it is exactly a one-ray-per-basis colouring that
is consistent on shared rays.  Exhaustion of the backtracking search certifies
that no section exists over this finite poset, and an independent counting
oracle cross-checks the bundled witness.
"""
from __future__ import annotations

import importlib.resources
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .context import Context, ContextPoset
from .dasein import build_spectral_presheaf, outer_das_proj
from .errors import EmptyPoset, InvalidWitness, OperatorNotInScope, ValidationError
from .opalg import (
    DEFAULT_TOL,
    HermitianOperator,
    Projection,
    TolerancePolicy,
    _as_matrix,
)
from .presheaf import FinitePresheaf, global_elements, validate


@dataclass(frozen=True)
class WitnessSet:
    """Rays (unit vectors) and the orthonormal bases they form."""

    name: str
    dim: int
    rays: tuple  # of numpy arrays, unit norm
    bases: tuple  # of tuples of ray indices

    def __post_init__(self):
        seen = [False] * len(self.rays)
        for basis in self.bases:
            if len(basis) != self.dim:
                raise InvalidWitness("basis size differs from the dimension")
            g = np.stack([self.rays[i] for i in basis])
            if np.max(np.abs(g @ g.conj().T - np.eye(self.dim))) > 1e-9:
                raise InvalidWitness("basis is not orthonormal")
            for i in basis:
                seen[i] = True
        if not all(seen):
            raise InvalidWitness("some ray appears in no basis")

    def incidence(self) -> List[int]:
        counts = [0] * len(self.rays)
        for basis in self.bases:
            for i in basis:
                counts[i] += 1
        return counts


def load_witness(source: str, name: Optional[str] = None) -> WitnessSet:
    """Parse a witness file: 'dim N', 'ray LABEL c1 .. cN', 'basis L1 .. LN'.

    The bundled set is available as load_witness('cabello18').
    """
    if source == "cabello18":
        text = (importlib.resources.files("toposqt.data") / "cabello18.txt").read_text()
        name = name or "cabello18"
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
        name = name or source
    dim = None
    labels: Dict[str, int] = {}
    rays: List[np.ndarray] = []
    bases: List[Tuple[int, ...]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "dim":
            dim = int(parts[1])
        elif parts[0] == "ray":
            if dim is None:
                raise InvalidWitness("line %d: ray before dim" % lineno)
            label = parts[1]
            coords = np.array([float(x) for x in parts[2:]], dtype=complex)
            if coords.shape[0] != dim:
                raise InvalidWitness("line %d: ray has wrong length" % lineno)
            n = np.linalg.norm(coords)
            if n == 0:
                raise InvalidWitness("line %d: zero ray" % lineno)
            labels[label] = len(rays)
            rays.append(coords / n)
        elif parts[0] == "basis":
            try:
                bases.append(tuple(labels[lbl] for lbl in parts[1:]))
            except KeyError as e:
                raise InvalidWitness("line %d: unknown ray %s" % (lineno, e))
        else:
            raise InvalidWitness("line %d: unknown directive %r" % (lineno, parts[0]))
    if dim is None or not rays or not bases:
        raise InvalidWitness("witness file must declare dim, rays and bases")
    return WitnessSet(name, dim, tuple(rays), tuple(bases))


def ks_poset_from_witness(w: WitnessSet, tol: TolerancePolicy = DEFAULT_TOL) -> ContextPoset:
    """One maximal context per basis plus one two-block context per ray."""
    contexts = []
    for basis in w.bases:
        blocks = [Projection(np.outer(w.rays[i], w.rays[i].conj()), tol) for i in basis]
        contexts.append(Context(blocks, tol))
    for ray in w.rays:
        p = np.outer(ray, ray.conj())
        contexts.append(Context([Projection(p, tol),
                                 Projection(np.eye(w.dim) - p, tol)], tol))
    if not contexts:
        raise EmptyPoset("witness produced no contexts")
    return ContextPoset(contexts, tol)


@dataclass(frozen=True)
class SearchCertificate:
    """Result of the exhaustive global-section search over a witness poset."""

    outcome: str  # 'sections_found' | 'exhausted'
    n_sections: int
    section: Optional[Dict[str, int]]
    nodes: int
    prunes: int
    poset_fingerprint: str


def section_search(poset: ContextPoset,
                   sigma: Optional[FinitePresheaf] = None) -> SearchCertificate:
    """Enumerate all global sections of the spectral presheaf over the poset."""
    if sigma is None:
        sigma = build_spectral_presheaf(poset)
    stats: Dict[str, int] = {}
    sections = global_elements(sigma, stats=stats)
    if sections:
        return SearchCertificate("sections_found", len(sections), sections[0],
                                 stats.get("nodes", 0), stats.get("prunes", 0),
                                 poset.fingerprint())
    return SearchCertificate("exhausted", 0, None,
                             stats.get("nodes", 0), stats.get("prunes", 0),
                             poset.fingerprint())


def parity_oracle(w: WitnessSet) -> Optional[bool]:
    """Counting argument independent of any search.

    When every ray sits in an even number of bases and the number of bases is
    odd, a one-ray-per-basis colouring would make an odd total equal an even
    one; returns True (unsatisfiable) in that case, None when inconclusive.
    """
    counts = w.incidence()
    if all(c % 2 == 0 for c in counts) and len(w.bases) % 2 == 1:
        return True
    return None


def dual_presheaf(poset: ContextPoset) -> FinitePresheaf:
    """The presheaf of two-valued homomorphisms on each context, read as a
    Boolean algebra.

    A homomorphism on a finite Boolean block algebra sends exactly one block
    to 1, so the fibre mirrors the Gelfand spectrum and restriction follows
    block dominance; global elements are exactly the finite-poset valuations.
    """
    tol = poset.tol
    fibre = {}
    restriction = {}
    for cid in poset.ids():
        v = poset.contexts[cid]
        fibre[cid] = tuple("hom%d" % i for i in range(v.n_blocks))
    for child, parent in poset.comparable_pairs():
        vc, vp = poset.contexts[child], poset.contexts[parent]
        rmap = {}
        for i, q in enumerate(vp.blocks):
            j = vc.dominating_block(q, tol)
            rmap["hom%d" % i] = "hom%d" % j
        restriction[(child, parent)] = rmap
    p = FinitePresheaf(poset, fibre, restriction)
    violation = validate(p)
    if violation is not None:
        raise ValidationError("dual presheaf failed validation: %s" % violation)
    return p


def boolean_das(P, b: Context, tol: TolerancePolicy = DEFAULT_TOL) -> Projection:
    """Outer daseinisation into a context read as its Boolean block algebra.

    The Boolean algebra of a finite context is its projection lattice, so this
    coincides with the ordinary outer daseinisation; kept as a named operation
    for the Boolean-base formulation.
    """
    return outer_das_proj(P, b, tol)


def func_check(section: Dict[str, int], poset: ContextPoset,
               ops: Dict[str, HermitianOperator],
               table: Dict[str, Tuple[str, str]],
               tol: TolerancePolicy = DEFAULT_TOL) -> Optional[Dict[str, str]]:
    """Validate the functional composition rule on a found section.

    `table` maps a result name to (function name, argument name), with the
    function one of 'identity' or 'square'.  For each context whose span
    contains both operators, the value the section assigns to the composite
    must be the function of the value assigned to the argument.  Returns None
    or the first violation record.
    """
    fns: Dict[str, Callable[[float], float]] = {
        "identity": lambda x: x,
        "square": lambda x: x * x,
    }
    from .context import span_membership_residual

    for out_name, (fname, arg_name) in table.items():
        if fname not in fns:
            raise ValidationError("unknown function %r" % fname)
        if out_name not in ops or arg_name not in ops:
            raise OperatorNotInScope("operators %r, %r must be in scope" % (out_name, arg_name))
        f = fns[fname]
        a = _as_matrix(ops[arg_name])
        fa = _as_matrix(ops[out_name])
        for cid, block in section.items():
            v = poset.contexts[cid]
            if (span_membership_residual(a, v) > tol.eps_matrix * 100
                    or span_membership_residual(fa, v) > tol.eps_matrix * 100):
                continue
            va = v.char_value(block, a, tol)
            vfa = v.char_value(block, fa, tol)
            if abs(vfa - f(va)) > tol.eps_eig * 10:
                return {"context": cid, "operator": arg_name, "function": fname,
                        "value": repr(va), "composite_value": repr(vfa)}
    return None
