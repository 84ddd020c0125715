"""Quantity-value structures over a finite context poset.

Values of a physical quantity at a stage V are monotone real functions on the
downset of V: outer daseinisation yields order-reversing functions (values
grow as contexts shrink), inner daseinisation order-preserving ones, and the
pair gives a nested family of intervals.  The Grothendieck completion of the
order-reversing monoid restores subtraction and supports squares of embedded
elements; both are realized here extensionally, since functions on a finite
downset have no other finite description.

Completion pairs are kept as representatives with an exact equivalence test
(the pointwise monoid cancels); canonical forms exist only for serialization.
"""
from __future__ import annotations

from typing import Dict, List, Mapping, Optional, Tuple

from .context import ContextPoset
from .dasein import (
    SpectralElement,
    build_spectral_presheaf,
    inner_das_sa,
    outer_das_sa,
    restrict_element,
)
from .errors import (
    NonHermitianInput,
    NotOuterForm,
    StageMismatch,
    UndefinedOperation,
    ValidationError,
)
from .opalg import DEFAULT_TOL, TolerancePolicy, _as_matrix, is_hermitian
from .presheaf import FinitePresheaf
from .truth import PseudoState

_EQ_EPS = 1e-9


class _StageFunction:
    """A real-valued function on the downset of a stage, monotonicity checked."""

    reversing = True

    def __init__(self, poset: ContextPoset, stage: str, values: Mapping[str, float]):
        down = poset.downset_ids(stage)
        if set(values) != set(down):
            raise ValidationError("values must cover exactly the downset of the stage")
        self.poset = poset
        self.stage = stage
        self.values = {k: float(values[k]) for k in down}
        self._check_monotone()

    def _check_monotone(self):
        for child, parent in self.poset.comparable_pairs():
            if child in self.values and parent in self.values:
                lo, hi = self.values[parent], self.values[child]
                if self.reversing:
                    if hi < lo - _EQ_EPS:
                        raise ValidationError("function is not order-reversing")
                else:
                    if hi > lo + _EQ_EPS:
                        raise ValidationError("function is not order-preserving")

    def __call__(self, cid: str) -> float:
        return self.values[cid]

    def restrict(self, child: str) -> "_StageFunction":
        down = self.poset.downset_ids(child)
        return type(self)(self.poset, child, {k: self.values[k] for k in down})

    def pointwise_eq(self, other: "_StageFunction", eps: float = _EQ_EPS) -> bool:
        return (self.stage == other.stage
                and all(abs(self.values[k] - other.values[k]) < eps for k in self.values))

    def _binary(self, other, fn, kind):
        if self.stage != other.stage:
            raise StageMismatch("stage mismatch in function arithmetic")
        vals = {k: fn(self.values[k], other.values[k]) for k in self.values}
        return kind(self.poset, self.stage, vals)


class OrderReversingFn(_StageFunction):
    reversing = True

    def add(self, other: "OrderReversingFn") -> "OrderReversingFn":
        return self._binary(other, lambda a, b: a + b, OrderReversingFn)


class OrderPreservingFn(_StageFunction):
    reversing = False

    def add(self, other: "OrderPreservingFn") -> "OrderPreservingFn":
        return self._binary(other, lambda a, b: a + b, OrderPreservingFn)


def constant_fn(poset: ContextPoset, stage: str, value: float, reversing: bool = True):
    vals = {k: value for k in poset.downset_ids(stage)}
    return (OrderReversingFn if reversing else OrderPreservingFn)(poset, stage, vals)


class RPair:
    """An (order-preserving, order-reversing) pair with mu <= nu pointwise."""

    def __init__(self, mu: OrderPreservingFn, nu: OrderReversingFn):
        if mu.stage != nu.stage:
            raise StageMismatch("pair components live at different stages")
        for k in mu.values:
            if mu.values[k] > nu.values[k] + _EQ_EPS:
                raise ValidationError("pair violates mu <= nu at %s" % k)
        self.mu = mu
        self.nu = nu
        self.stage = mu.stage
        self.poset = mu.poset

    def restrict(self, child: str) -> "RPair":
        return RPair(self.mu.restrict(child), self.nu.restrict(child))

    def pointwise_eq(self, other: "RPair", eps: float = _EQ_EPS) -> bool:
        return self.mu.pointwise_eq(other.mu, eps) and self.nu.pointwise_eq(other.nu, eps)

    def width(self, cid: str) -> float:
        return self.nu.values[cid] - self.mu.values[cid]

    def add(self, other: "RPair") -> "RPair":
        return RPair(self.mu.add(other.mu), self.nu.add(other.nu))


class KPair:
    """A completion class [nu, kappa], read as the difference nu - kappa."""

    def __init__(self, nu: OrderReversingFn, kappa: OrderReversingFn):
        if nu.stage != kappa.stage:
            raise StageMismatch("pair components live at different stages")
        self.nu = nu
        self.kappa = kappa
        self.stage = nu.stage
        self.poset = nu.poset

    def as_difference(self) -> Dict[str, float]:
        return {k: self.nu.values[k] - self.kappa.values[k] for k in self.nu.values}

    def restrict(self, child: str) -> "KPair":
        return KPair(self.nu.restrict(child), self.kappa.restrict(child))


def k_ops(op: str, x: KPair, y: Optional[KPair] = None, eps: float = _EQ_EPS):
    """Group operations on completion pairs: add, neg, and the equivalence test
    nu1 + kappa2 = kappa1 + nu2 (cancellation holds, so no slack element)."""
    if op == "neg":
        return KPair(x.kappa, x.nu)
    if y is None or x.stage != y.stage:
        raise StageMismatch("binary completion operation needs two pairs at one stage")
    if op == "add":
        return KPair(x.nu.add(y.nu), x.kappa.add(y.kappa))
    if op == "eq":
        return all(
            abs((x.nu.values[k] + y.kappa.values[k]) - (x.kappa.values[k] + y.nu.values[k])) < eps
            for k in x.nu.values)
    raise ValidationError("unknown completion operation %r" % op)


def k_zero(poset: ContextPoset, stage: str) -> KPair:
    z = constant_fn(poset, stage, 0.0)
    return KPair(z, z)


def k_embed(nu: OrderReversingFn) -> KPair:
    return KPair(nu, constant_fn(nu.poset, nu.stage, 0.0))


def k_canonical(x: KPair) -> Tuple[Dict[str, float], Dict[str, float]]:
    """A serialization-only canonical form: shift kappa to be minimal pointwise."""
    shift = min(x.kappa.values.values())
    return ({k: v - shift for k, v in x.nu.values.items()},
            {k: v - shift for k, v in x.kappa.values.items()})


def k_square(x: KPair) -> KPair:
    """Square of an embedded element [nu, 0]: split nu into positive and
    negative parts; the result represents the pointwise square of nu."""
    if any(abs(v) > _EQ_EPS for v in x.kappa.values.values()):
        raise NotOuterForm("squares are defined only for embedded pairs [nu, 0]")
    nu = x.nu
    plus = {k: max(v, 0.0) ** 2 for k, v in nu.values.items()}
    minus = {k: -(min(v, 0.0) ** 2) for k, v in nu.values.items()}
    return KPair(OrderReversingFn(nu.poset, nu.stage, plus),
                 OrderReversingFn(nu.poset, nu.stage, minus))


def k_square_general(x: KPair):
    raise UndefinedOperation(
        "the square of a general completion pair is undefined; only embedded "
        "[nu, 0] elements have squares")


def rpair_product(x: RPair, y: RPair):
    raise UndefinedOperation(
        "interval pairs carry no product; pointwise multiplication does not "
        "preserve monotonicity")


def scalar_mult(r: float, x):
    """Multiply an interval or completion pair by a real number, swapping the
    roles of the components for negative scalars."""
    if isinstance(x, RPair):
        if r >= 0:
            mu = OrderPreservingFn(x.poset, x.stage, {k: r * v for k, v in x.mu.values.items()})
            nu = OrderReversingFn(x.poset, x.stage, {k: r * v for k, v in x.nu.values.items()})
        else:
            mu = OrderPreservingFn(x.poset, x.stage, {k: r * v for k, v in x.nu.values.items()})
            nu = OrderReversingFn(x.poset, x.stage, {k: r * v for k, v in x.mu.values.items()})
        return RPair(mu, nu)
    if isinstance(x, KPair):
        if r >= 0:
            return KPair(
                OrderReversingFn(x.poset, x.stage, {k: r * v for k, v in x.nu.values.items()}),
                OrderReversingFn(x.poset, x.stage, {k: r * v for k, v in x.kappa.values.items()}))
        return KPair(
            OrderReversingFn(x.poset, x.stage, {k: -r * v for k, v in x.kappa.values.items()}),
            OrderReversingFn(x.poset, x.stage, {k: -r * v for k, v in x.nu.values.items()}))
    raise ValidationError("scalar_mult expects an RPair or KPair")


def pseudo_subtract(x: RPair, y: RPair) -> RPair:
    """(mu1, nu1) - (mu2, nu2) := (mu1 - nu2, nu1 - mu2); widths add."""
    if x.stage != y.stage:
        raise StageMismatch("pseudo-subtraction needs a common stage")
    mu = OrderPreservingFn(x.poset, x.stage,
                           {k: x.mu.values[k] - y.nu.values[k] for k in x.mu.values})
    nu = OrderReversingFn(x.poset, x.stage,
                          {k: x.nu.values[k] - y.mu.values[k] for k in x.nu.values})
    return RPair(mu, nu)


def pr_quotient(x: RPair) -> KPair:
    """The monoid map (mu, nu) -> [nu, -mu] inducing the isomorphism between
    interval pairs modulo mu1+nu1 = mu2+nu2 and the completion."""
    neg_mu = OrderReversingFn(x.poset, x.stage, {k: -v for k, v in x.mu.values.items()})
    return KPair(x.nu, neg_mu)


def rpair_equiv(x: RPair, y: RPair, eps: float = _EQ_EPS) -> bool:
    """The interval-pair equivalence mu1 + nu1 = mu2 + nu2 pointwise."""
    if x.stage != y.stage:
        raise StageMismatch("equivalence needs a common stage")
    return all(abs((x.mu.values[k] + x.nu.values[k]) - (y.mu.values[k] + y.nu.values[k])) < eps
               for k in x.mu.values)


def bv_decompose(poset: ContextPoset, stage: str,
                 f: Mapping[str, float]) -> Tuple[OrderReversingFn, OrderReversingFn]:
    """Split a function on a finite downset into a difference of two
    order-reversing functions via its running variation.

    The variation I_f(V) is the largest sum of absolute increments along a
    chain ending at V; refining a chain never lowers the sum, so a dynamic
    program over covering pairs computes it exactly.
    """
    down = poset.downset_ids(stage)
    if set(f) != set(down):
        raise ValidationError("function must be defined on exactly the downset")
    below: Dict[str, List[str]] = {
        v: [u for u in down if u != v and poset.leq(u, v)] for v in down}
    variation: Dict[str, float] = {}
    for v in sorted(down, key=lambda u: len(below[u])):
        best = 0.0
        for u in below[v]:
            best = max(best, variation[u] + abs(f[v] - f[u]))
        variation[v] = best
    first = OrderReversingFn(poset, stage, {k: f[k] - variation[k] for k in down})
    second = OrderReversingFn(poset, stage, {k: -variation[k] for k in down})
    return first, second


class QuantityArrow:
    """Per-context components of the arrow attached to a Hermitian operator.

    kind 'outer': component sends a character to the order-reversing function
    of outer-daseinised values.  kind 'pair': component sends a character to
    the (inner, outer) interval pair.  Naturality is validated on creation.
    """

    def __init__(self, op_name: str, kind: str, poset: ContextPoset,
                 components: Dict[str, Dict[int, object]],
                 sigma: FinitePresheaf):
        if kind not in ("outer", "pair"):
            raise ValidationError("kind must be outer or pair")
        self.op_name = op_name
        self.kind = kind
        self.poset = poset
        self.components = components
        self.sigma = sigma
        self._validate_naturality()

    def _validate_naturality(self):
        for child, parent in self.poset.comparable_pairs():
            for block in self.sigma.fibre[parent]:
                lam = SpectralElement(parent, block)
                down_elem = restrict_element(self.poset, lam, child)
                left = self.components[parent][block].restrict(child)
                right = self.components[child][down_elem.block]
                if not left.pointwise_eq(right):
                    raise ValidationError(
                        "naturality fails for %s between %s and %s" % (self.op_name, parent, child))

    def at(self, cid: str, block: int):
        return self.components[cid][block]


def _das_tables(A, poset: ContextPoset, tol: TolerancePolicy):
    outer = {cid: outer_das_sa(A, poset.contexts[cid], tol) for cid in poset.ids()}
    inner = {cid: inner_das_sa(A, poset.contexts[cid], tol) for cid in poset.ids()}
    return outer, inner


def breve_outer(A, poset: ContextPoset, tol: TolerancePolicy = DEFAULT_TOL,
                sigma: Optional[FinitePresheaf] = None, name: str = "A") -> QuantityArrow:
    """The outer arrow: each character is sent to the function recording the
    values of the outer daseinisations down the poset."""
    m = _as_matrix(A)
    if not is_hermitian(m, tol):
        raise NonHermitianInput("breve_outer requires a Hermitian matrix")
    if sigma is None:
        sigma = build_spectral_presheaf(poset)
    outer, _ = _das_tables(m, poset, tol)
    components: Dict[str, Dict[int, object]] = {}
    for cid in poset.ids():
        comp = {}
        for block in sigma.fibre[cid]:
            vals = {}
            for vp in poset.downset_ids(cid):
                lam = restrict_element(poset, SpectralElement(cid, block), vp)
                vals[vp] = poset.contexts[vp].char_value(lam.block, outer[vp], tol)
            comp[block] = OrderReversingFn(poset, cid, vals)
        components[cid] = comp
    return QuantityArrow(name, "outer", poset, components, sigma)


def breve_pair(A, poset: ContextPoset, tol: TolerancePolicy = DEFAULT_TOL,
               sigma: Optional[FinitePresheaf] = None, name: str = "A") -> QuantityArrow:
    """The two-sided arrow: each character is sent to the (inner, outer) pair."""
    m = _as_matrix(A)
    if not is_hermitian(m, tol):
        raise NonHermitianInput("breve_pair requires a Hermitian matrix")
    if sigma is None:
        sigma = build_spectral_presheaf(poset)
    outer, inner = _das_tables(m, poset, tol)
    components: Dict[str, Dict[int, object]] = {}
    for cid in poset.ids():
        comp = {}
        for block in sigma.fibre[cid]:
            up_vals, down_vals = {}, {}
            for vp in poset.downset_ids(cid):
                lam = restrict_element(poset, SpectralElement(cid, block), vp)
                ctx = poset.contexts[vp]
                down_vals[vp] = ctx.char_value(lam.block, inner[vp], tol)
                up_vals[vp] = ctx.char_value(lam.block, outer[vp], tol)
            comp[block] = RPair(OrderPreservingFn(poset, cid, down_vals),
                                OrderReversingFn(poset, cid, up_vals))
        components[cid] = comp
    return QuantityArrow(name, "pair", poset, components, sigma)


def intrinsic_dispersion(A, poset: ContextPoset,
                         tol: TolerancePolicy = DEFAULT_TOL,
                         sigma: Optional[FinitePresheaf] = None
                         ) -> Dict[Tuple[str, int], KPair]:
    """The completion-valued dispersion: the class of (values of the squared
    operator's outer arrow) minus (the square of the operator's outer arrow),
    stage by stage and character by character."""
    m = _as_matrix(A)
    if not is_hermitian(m, tol):
        raise NonHermitianInput("intrinsic_dispersion requires a Hermitian matrix")
    if sigma is None:
        sigma = build_spectral_presheaf(poset)
    arrow_a = breve_outer(m, poset, tol, sigma)
    arrow_a2 = breve_outer(m @ m, poset, tol, sigma)
    out: Dict[Tuple[str, int], KPair] = {}
    for cid in poset.ids():
        for block in sigma.fibre[cid]:
            lhs = k_embed(arrow_a2.at(cid, block))
            rhs = k_square(k_embed(arrow_a.at(cid, block)))
            out[(cid, block)] = k_ops("add", lhs, k_ops("neg", rhs))
    return out


def value_in_state(A, w: PseudoState, poset: ContextPoset,
                   tol: TolerancePolicy = DEFAULT_TOL,
                   sigma: Optional[FinitePresheaf] = None) -> Dict[str, List[RPair]]:
    """The image of the pseudo-state under the two-sided arrow, per context.

    Restriction maps the stage-V image exactly onto the stage-V' image because
    every character in the pseudo-state at V' arises by restriction; this
    equality is validated here.
    """
    if sigma is None:
        sigma = build_spectral_presheaf(poset)
    arrow = breve_pair(A, poset, tol, sigma)
    image: Dict[str, List[RPair]] = {}
    for cid in poset.ids():
        pairs: List[RPair] = []
        for block in sorted(w.subobject.selected[cid]):
            cand = arrow.at(cid, block)
            if not any(cand.pointwise_eq(p) for p in pairs):
                pairs.append(cand)
        image[cid] = pairs
    for child, parent in poset.comparable_pairs():
        restricted = [p.restrict(child) for p in image[parent]]
        for r in restricted:
            if not any(r.pointwise_eq(p) for p in image[child]):
                raise ValidationError("image not closed under restriction")
        for p in image[child]:
            if not any(r.pointwise_eq(p) for r in restricted):
                raise ValidationError("restriction misses part of the image")
    return image


def inverse_image_of_image(P, poset: ContextPoset,
                           tol: TolerancePolicy = DEFAULT_TOL,
                           sigma: Optional[FinitePresheaf] = None) -> Dict[str, set]:
    """Fibrewise inverse image, under the arrow of P, of the image of P's own
    daseinised subobject; the theorem says this recovers the subobject."""
    from .dasein import clopen_subobject

    if sigma is None:
        sigma = build_spectral_presheaf(poset)
    arrow = breve_pair(P, poset, tol, sigma)
    sub = clopen_subobject(P, poset, "outer", tol, sigma)
    out: Dict[str, set] = {}
    for cid in poset.ids():
        image = [arrow.at(cid, b) for b in sorted(sub.selected[cid])]
        out[cid] = {b for b in sigma.fibre[cid]
                    if any(arrow.at(cid, b).pointwise_eq(p) for p in image)}
    return out
