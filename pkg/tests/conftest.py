import numpy as np
import pytest

from toposqt.context import Context, ContextPoset, GenerationPolicy, build_poset
from toposqt.opalg import HermitianOperator, Projection


def random_hermitian(rng, dim, scale=1.0):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (m + m.conj().T) / 2


def random_unitary(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(m)
    return q @ np.diag(np.diag(r) / np.abs(np.diag(r)))


def random_projection(rng, dim, rank=None):
    if rank is None:
        rank = int(rng.integers(0, dim + 1))
    if rank == 0:
        return np.zeros((dim, dim), dtype=complex)
    u = random_unitary(rng, dim)
    cols = u[:, :rank]
    return cols @ cols.conj().T

def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_context(rng, dim, n_blocks=None):
    """A context with the given number of blocks, from a random unitary frame."""
    if n_blocks is None:
        n_blocks = int(rng.integers(2, dim + 1))
    u = random_unitary(rng, dim)
    cuts = sorted(rng.choice(range(1, dim), size=n_blocks - 1, replace=False)) + [dim]
    blocks = []
    start = 0
    for cut in cuts:
        cols = u[:, start:cut]
        blocks.append(Projection(cols @ cols.conj().T))
        start = cut
    return Context(blocks)


def diag_context(*eigs):
    from toposqt.context import context_from_commuting

    return context_from_commuting([np.diag([float(e) for e in eigs])])


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)


@pytest.fixture(scope="session")
def dim3_poset():
    """Maximal diagonal dim-3 context plus its three coarsenings."""
    a = HermitianOperator(np.diag([1.0, 2.0, 3.0]))
    pol = GenerationPolicy(seeds=(("A", a),), closure="coarsenings")
    return build_poset(pol)


@pytest.fixture(scope="session")
def dim2_poset():
    """Two incomparable maximal dim-2 contexts (diagonal and Hadamard-like)."""
    z = HermitianOperator(np.diag([1.0, -1.0]))
    x = HermitianOperator(np.array([[0.0, 1.0], [1.0, 0.0]]))
    pol = GenerationPolicy(seeds=(("Z", z), ("X", x)), closure="none")
    return build_poset(pol)


@pytest.fixture(scope="session")
def fork_poset():
    """A maximal dim-3 context above exactly two incomparable coarsenings."""
    a = np.diag([1.0, 2.0, 3.0])
    top = diag_context(1, 2, 3)
    c12 = diag_context(1, 1, 2)   # merges blocks 1,2
    c13 = diag_context(1, 2, 1)   # merges blocks 1,3
    return ContextPoset([top, c12, c13])
