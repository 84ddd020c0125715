"""Finite-dimensional complex operator algebra.

Hermitian operators, projections, spectral decompositions with eigenvalue
clustering, right-continuous spectral families, the spectral order, and the
central tolerance policy used everywhere else in the package.

Conventions:

* matrices are dense complex numpy arrays, tiny (dim <= 8 in practice);
* a spectral family is stored by its jump points and the cumulative
  projections at and after each jump (right-continuous convention), with the
  implicit value 0 below the first jump;
* the projection order P <= Q is decided by max|QP - P| < eps_matrix, which
  is basis independent and cheap.
"""
from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .errors import DimensionMismatch, NonHermitianInput, ValidationError


@dataclass(frozen=True)
class TolerancePolicy:
    """Central numerical tolerances.

    eps_matrix: entrywise matrix comparisons.
    eps_eig:    eigenvalue clustering and spectrum membership.
    eps_prob:   'probability equals one' tests in the truth machinery.
    """

    eps_matrix: float = 1e-9
    eps_eig: float = 1e-7
    eps_prob: float = 1e-7

    def __post_init__(self):
        if min(self.eps_matrix, self.eps_eig, self.eps_prob) <= 0.0:
            raise ValidationError("all tolerances must be strictly positive")
        if self.eps_eig < self.eps_matrix:
            raise ValidationError("eps_eig must be >= eps_matrix")


DEFAULT_TOL = TolerancePolicy()


def _as_matrix(obj) -> np.ndarray:
    if isinstance(obj, HermitianOperator):
        return obj.mat
    m = np.asarray(obj, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("operator must be a square matrix")
    return m


def max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


def is_hermitian(mat, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    m = _as_matrix(mat)
    return max_abs(m - m.conj().T) < tol.eps_matrix


class HermitianOperator:
    """A validated Hermitian matrix.  Immutable after construction."""

    __slots__ = ("mat", "dim")

    def __init__(self, mat, tol: TolerancePolicy = DEFAULT_TOL):
        m = np.array(_as_matrix(mat), dtype=complex)
        if max_abs(m - m.conj().T) >= tol.eps_matrix:
            raise NonHermitianInput(
                "matrix is not Hermitian within eps_matrix=%g" % tol.eps_matrix
            )
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)
        object.__setattr__(self, "dim", m.shape[0])

    def __setattr__(self, name, value):
        raise AttributeError("HermitianOperator is immutable")

    def __repr__(self):
        return "HermitianOperator(dim=%d)" % self.dim


class Projection(HermitianOperator):
    """An orthogonal projection; rank is the rounded trace."""

    __slots__ = ("rank",)

    def __init__(self, mat, tol: TolerancePolicy = DEFAULT_TOL):
        super().__init__(mat, tol)
        m = self.mat
        if max_abs(m @ m - m) >= tol.eps_matrix * 10:
            raise ValidationError("matrix is not idempotent within tolerance")
        tr = float(np.real(np.trace(m)))
        rank = int(round(tr))
        if abs(tr - rank) >= tol.eps_eig:
            raise ValidationError("projection trace %g is not near an integer" % tr)
        object.__setattr__(self, "rank", rank)

    def __repr__(self):
        return "Projection(dim=%d, rank=%d)" % (self.dim, self.rank)


def zero_projection(dim: int) -> Projection:
    return Projection(np.zeros((dim, dim), dtype=complex))


def identity_projection(dim: int) -> Projection:
    return Projection(np.eye(dim, dtype=complex))


def proj_leq(p, q, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    """Projection order: p <= q iff q p = p entrywise within eps_matrix."""
    pm, qm = _as_matrix(p), _as_matrix(q)
    if pm.shape != qm.shape:
        raise DimensionMismatch("projection dimensions differ")
    return max_abs(qm @ pm - pm) < tol.eps_matrix * 10


class StateVector:
    """A unit vector."""

    __slots__ = ("vec", "dim")

    def __init__(self, vec, tol: TolerancePolicy = DEFAULT_TOL):
        v = np.array(np.asarray(vec, dtype=complex).reshape(-1))
        n = float(np.linalg.norm(v))
        if abs(n - 1.0) >= max(tol.eps_matrix * 100, 1e-12):
            raise ValidationError("state vector norm %g is not 1" % n)
        v.setflags(write=False)
        object.__setattr__(self, "vec", v)
        object.__setattr__(self, "dim", v.shape[0])

    def __setattr__(self, name, value):
        raise AttributeError("StateVector is immutable")

    def projector(self) -> Projection:
        return Projection(np.outer(self.vec, self.vec.conj()))


class DensityMatrix:
    """A positive semidefinite operator with unit trace."""

    __slots__ = ("op",)

    def __init__(self, mat, tol: TolerancePolicy = DEFAULT_TOL):
        op = HermitianOperator(mat, tol)
        eigs = np.linalg.eigvalsh(op.mat)
        if float(eigs.min()) < -tol.eps_eig:
            raise ValidationError("density matrix is not positive semidefinite")
        tr = float(np.real(np.trace(op.mat)))
        if abs(tr - 1.0) >= tol.eps_eig:
            raise ValidationError("density matrix trace %g is not 1" % tr)
        object.__setattr__(self, "op", op)

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")


@dataclass(frozen=True)
class SpectralDecomposition:
    """Clustered eigenvalues with the projections onto their eigenspaces."""

    eigenvalues: tuple
    eigenprojections: tuple

    def __post_init__(self):
        if len(self.eigenvalues) != len(self.eigenprojections):
            raise ValidationError("eigenvalue/eigenprojection length mismatch")


@dataclass(frozen=True)
class SpectralFamily:
    """Right-continuous step family of projections.

    jumps are strictly increasing; cumulative[k] is the value of E_lambda for
    lambda in [jumps[k], jumps[k+1]); the value below jumps[0] is 0 and the
    final cumulative projection is the identity.
    """

    jumps: tuple
    cumulative: tuple

    def __post_init__(self):
        if len(self.jumps) != len(self.cumulative) or not self.jumps:
            raise ValidationError("family needs matching nonempty jumps/values")
        for a, b in zip(self.jumps, self.jumps[1:]):
            if not b > a:
                raise ValidationError("jumps must be strictly increasing")
        for p, q in zip(self.cumulative, self.cumulative[1:]):
            if not proj_leq(p, q):
                raise ValidationError("cumulative projections must increase")
        if self.cumulative[-1].rank != self.cumulative[-1].dim:
            raise ValidationError("final cumulative projection must be the identity")

    @property
    def dim(self) -> int:
        return self.cumulative[0].dim

    def value_at(self, lam: float) -> Projection:
        idx = None
        for k, jump in enumerate(self.jumps):
            if lam >= jump:
                idx = k
        if idx is None:
            return zero_projection(self.dim)
        return self.cumulative[idx]


def spectral_decompose(A, tol: TolerancePolicy = DEFAULT_TOL) -> SpectralDecomposition:
    """Eigendecomposition with single-linkage clustering of nearby eigenvalues.

    Eigenvalues closer than eps_eig are merged into one cluster, and the
    cluster's eigenprojection is the sum of the constituent rank-1 projectors.
    Degenerate spectra are the normal case here, and all the presheaf
    constructions depend only on eigenprojections.
    """
    m = _as_matrix(A)
    if not is_hermitian(m, tol):
        raise NonHermitianInput("spectral_decompose requires a Hermitian matrix")
    w, v = np.linalg.eigh(m)
    clusters = []  # list of lists of indices; w is ascending
    for i in range(len(w)):
        if clusters and w[i] - w[clusters[-1][-1]] <= tol.eps_eig:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    eigenvalues = []
    projections = []
    for idx in clusters:
        vals = w[idx]
        eigenvalues.append(float(np.mean(vals)))
        cols = v[:, idx]
        projections.append(Projection(cols @ cols.conj().T, tol))
    return SpectralDecomposition(tuple(eigenvalues), tuple(projections))


def spectral_family(A, tol: TolerancePolicy = DEFAULT_TOL) -> SpectralFamily:
    """The right-continuous spectral family of a Hermitian matrix."""
    dec = spectral_decompose(A, tol)
    running = np.zeros_like(_as_matrix(A))
    cumulative = []
    for p in dec.eigenprojections:
        running = running + p.mat
        cumulative.append(Projection(running, tol))
    return SpectralFamily(tuple(dec.eigenvalues), tuple(cumulative))


def family_to_operator(fam: SpectralFamily) -> HermitianOperator:
    """Reassemble sum_k jump_k * (E_k - E_{k-1})."""
    dim = fam.dim
    prev = np.zeros((dim, dim), dtype=complex)
    acc = np.zeros((dim, dim), dtype=complex)
    for lam, cum in zip(fam.jumps, fam.cumulative):
        acc = acc + lam * (cum.mat - prev)
        prev = cum.mat
    return HermitianOperator(acc)


def spectral_order_leq(A, B, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    """Spectral order: A <=s B iff E^B_lam <= E^A_lam for all lam.

    Both step families are constant between jumps, so comparing at every jump
    of either family decides the order.
    """
    ma, mb = _as_matrix(A), _as_matrix(B)
    if ma.shape != mb.shape:
        raise DimensionMismatch("spectral_order_leq requires equal dimensions")
    fa = spectral_family(ma, tol)
    fb = spectral_family(mb, tol)
    # jumps of the two families that agree within eps_eig are the same jump;
    # evaluate just past each cluster, where both step families have settled.
    merged = sorted(set(fa.jumps) | set(fb.jumps))
    probes = []
    for lam in merged:
        if probes and lam - probes[-1] <= tol.eps_eig:
            probes[-1] = lam
        else:
            probes.append(lam)
    for lam in probes:
        probe = lam + tol.eps_eig / 4
        if not proj_leq(fb.value_at(probe), fa.value_at(probe), tol):
            return False
    return True


def projection_meet(P, Q, tol: TolerancePolicy = DEFAULT_TOL) -> Projection:
    """Projection onto range(P) intersect range(Q).

    The intersection is the joint null space of (1-P) and (1-Q), extracted
    from the SVD of the stacked matrix.
    """
    pm, qm = _as_matrix(P), _as_matrix(Q)
    if pm.shape != qm.shape:
        raise DimensionMismatch("projection dimensions differ")
    dim = pm.shape[0]
    eye = np.eye(dim, dtype=complex)
    stacked = np.vstack([eye - pm, eye - qm])
    _, s, vh = np.linalg.svd(stacked)
    null_mask = np.concatenate([s, np.zeros(max(0, dim - len(s)))]) < 1e-7
    basis = vh.conj().T[:, null_mask[: vh.shape[0]]]
    if basis.shape[1] == 0:
        return zero_projection(dim)
    # columns are orthonormal already (rows of vh are)
    return Projection(basis @ basis.conj().T, tol)


def projection_join(P, Q, tol: TolerancePolicy = DEFAULT_TOL) -> Projection:
    """Projection onto range(P) + range(Q), via the De Morgan dual."""
    pm, qm = _as_matrix(P), _as_matrix(Q)
    if pm.shape != qm.shape:
        raise DimensionMismatch("projection dimensions differ")
    dim = pm.shape[0]
    eye = np.eye(dim, dtype=complex)
    comp = projection_meet(eye - pm, eye - qm, tol)
    return Projection(eye - comp.mat, tol)


def projection_meet_join(P, Q, which: str, tol: TolerancePolicy = DEFAULT_TOL) -> Projection:
    if which == "meet":
        return projection_meet(P, Q, tol)
    if which == "join":
        return projection_join(P, Q, tol)
    raise ValidationError("which must be 'meet' or 'join'")


def proposition_projector(A, interval, tol: TolerancePolicy = DEFAULT_TOL) -> Projection:
    """Spectral projector of A onto a closed interval (membership within eps_eig).

    `interval` is a pair (lo, hi) or an iterable of such pairs (finite union).
    """
    m = _as_matrix(A)
    if not is_hermitian(m, tol):
        raise NonHermitianInput("proposition_projector requires a Hermitian matrix")
    pairs = list(interval)
    if len(pairs) == 2 and np.isscalar(pairs[0]):
        pairs = [tuple(pairs)]
    dec = spectral_decompose(m, tol)
    acc = np.zeros_like(m)
    for val, proj in zip(dec.eigenvalues, dec.eigenprojections):
        for lo, hi in pairs:
            if lo - tol.eps_eig <= val <= hi + tol.eps_eig:
                acc = acc + proj.mat
                break
    return Projection(acc, tol)


def expectation(state, op, tol: TolerancePolicy = DEFAULT_TOL) -> float:
    """<psi|M|psi> or tr(rho M) depending on the state kind."""
    m = _as_matrix(op)
    if isinstance(state, StateVector):
        return float(np.real(state.vec.conj() @ m @ state.vec))
    if isinstance(state, DensityMatrix):
        return float(np.real(np.trace(state.op.mat @ m)))
    v = np.asarray(state, dtype=complex).reshape(-1)
    return float(np.real(v.conj() @ m @ v))


def commutes(A, B, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    ma, mb = _as_matrix(A), _as_matrix(B)
    if ma.shape != mb.shape:
        raise DimensionMismatch("commutes requires equal dimensions")
    return max_abs(ma @ mb - mb @ ma) < tol.eps_matrix * 100


def matrices_equal(A, B, eps: float) -> bool:
    return max_abs(_as_matrix(A) - _as_matrix(B)) < eps
