import numpy as np
import pytest
from scipy.linalg import polar

from qifs.qstate import haar_unitary, random_density_matrix, random_ket


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_pairs(dim, count, seed, rank=None):
    rng = np.random.default_rng(seed)
    return [(random_density_matrix(dim, rng, rank), random_density_matrix(dim, rng, rank))
            for _ in range(count)]


def random_kets(dim, count, seed):
    rng = np.random.default_rng(seed)
    return [random_ket(dim, rng) for _ in range(count)]


def random_unitaries(dim, count, seed):
    rng = np.random.default_rng(seed)
    return [haar_unitary(dim, rng) for _ in range(count)]


def block_diagonal_family(rng, n, count):
    """``count`` unitaries sharing a hidden common block structure on ``C^n``."""
    cut = int(rng.integers(1, n))
    q = haar_unitary(n, rng)
    fam = []
    for _ in range(count):
        blocks = np.zeros((n, n), dtype=complex)
        blocks[:cut, :cut] = haar_unitary(cut, rng)
        blocks[cut:, cut:] = haar_unitary(n - cut, rng)
        fam.append(q @ blocks @ q.conj().T)
    return fam


def zero_block_unitary(rng, n):
    """Haar unitary pushed onto ``U[A, B] = 0``, plus the index set ``A``.

    Alternates zeroing the upper block with re-unitarizing by polar
    decomposition, then forces the upper block to exact zero.  The opposite
    block is never touched directly.
    """
    size = int(rng.integers(1, n))
    a = np.sort(rng.choice(n, size=size, replace=False))
    b = np.setdiff1d(np.arange(n), a)
    u = haar_unitary(n, rng)
    for _ in range(500):
        u[np.ix_(a, b)] = 0
        u, _ = polar(u)
        if np.max(np.abs(u[np.ix_(a, b)])) < 1e-13:
            break
    u[np.ix_(a, b)] = 0
    return u, a
