"""Invariant states of quantum channels and the common-block-diagonal uniqueness test.

Vectorization is column-major throughout: ``vec(A rho B) = (B^T (x) A) vec(rho)``,
so a Kraus channel has superoperator ``sum_j conj(V_j) (x) V_j``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .channels import MixedQIFS, QuantumChannel, random_external_field
from .errors import ConvergenceError, DimensionError, InvalidStateError, PreconditionError
from .qstate import as_matrix, is_unitary, matrix_to_json, trace_distance

EIG_TOL = 1e-9
COMMUTANT_TOL = 1e-8
BLOCK_GAP = 1e-6
DENSE_MAX_DIM = 100


def vec(rho) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    n = int(round(np.sqrt(v.size))) if dim is None else dim
    if n * n != v.size:
        raise DimensionError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape(n, n, order="F")


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _to_state(m: np.ndarray) -> np.ndarray:
    """Hermitian part, negative eigenvalues clipped, trace normalized."""
    h = _hermitize(m)
    tr = np.trace(h).real
    if abs(tr) > 1e-300 and tr < 0:
        h = -h
    w, v = np.linalg.eigh(h)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise ConvergenceError("fixed matrix has no positive part")
    out = (v * (w / w.sum())) @ v.conj().T
    return _hermitize(out)


@dataclass(frozen=True, eq=False)
class Superoperator:
    """``N^2 x N^2`` matrix acting on column-vectorized density matrices."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.matrix.shape[0])))

    def __call__(self, rho) -> np.ndarray:
        return unvec(self.matrix @ vec(as_matrix(rho)), self.dim)

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues sorted by decreasing modulus."""
        w = np.linalg.eigvals(self.matrix)
        return w[np.argsort(-np.abs(w), kind="stable")]


def superoperator_of(channel) -> Superoperator:
    """Superoperator of a channel, or of a bare list of Kraus operators."""
    kraus = channel.kraus if isinstance(channel, QuantumChannel) else [np.asarray(k) for k in channel]
    return Superoperator(sum(np.kron(k.conj(), k) for k in kraus))


# ---------------------------------------------------------------------------
# Fixed states
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FixedStateReport:
    multiplicity: int | None
    eigenvalues: np.ndarray
    basis: tuple
    state: np.ndarray
    residual: float
    method: str

    @property
    def unique(self) -> bool | None:
        return None if self.multiplicity is None else self.multiplicity == 1

    def to_json(self) -> dict:
        return {
            "multiplicity": self.multiplicity,
            "unique": self.unique,
            "eigenvalues": {"re": np.real(self.eigenvalues).tolist(),
                            "im": np.imag(self.eigenvalues).tolist()},
            "basis": [matrix_to_json(b) for b in self.basis],
            "state": matrix_to_json(self.state),
            "residual": self.residual,
            "method": self.method,
        }


def _hermitian_basis(mats: Sequence[np.ndarray], tol: float = 1e-10) -> tuple:
    """Orthonormal (Hilbert-Schmidt) real basis of the Hermitian matrices in ``span(mats)``.

    Assumes the span is closed under the adjoint, which holds for fixed
    spaces of Hermiticity-preserving maps.
    """
    cands = []
    for x in mats:
        cands.append(_hermitize(x))
        cands.append(_hermitize(-1j * x))
    stacked = np.array([np.concatenate([c.real.ravel(), c.imag.ravel()]) for c in cands])
    _, s, vh = np.linalg.svd(stacked, full_matrices=False)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    n = mats[0].shape[0]
    out = []
    for row in vh[:rank]:
        h = row[: n * n].reshape(n, n) + 1j * row[n * n:].reshape(n, n)
        out.append(_hermitize(h))
    return tuple(out)


def fixed_states(channel: QuantumChannel, tol: float = EIG_TOL) -> FixedStateReport:
    """Eigenvalue-1 analysis of a trace-preserving channel.

    The multiplicity counts eigenvalues within ``tol`` of 1.  The
    representative state is the spectral projection of ``1/N`` onto the
    fixed space.  For ``N > 100`` the dense eigensolve is skipped and only a
    power-iteration representative is returned (multiplicity unknown).
    """
    if not channel.trace_preserving:
        raise PreconditionError("fixed_states needs a trace-preserving channel")
    n = channel.dim
    if n > DENSE_MAX_DIM:
        res = power_iteration(channel, np.eye(n) / n)
        return FixedStateReport(None, np.array([]), (res.state,), res.state, res.residual,
                                "power-iteration")
    m = superoperator_of(channel).matrix
    w = np.linalg.eigvals(m)
    near = w[np.abs(w - 1.0) < tol]
    mult = len(near)
    if mult == 0:
        raise ConvergenceError("no eigenvalue within tolerance of 1 for a trace-preserving channel")
    u, _, vh = np.linalg.svd(m - np.eye(n * n))
    right = vh[-mult:].conj().T
    left = u[:, -mult:]
    # oblique spectral projector onto the fixed space along the other eigenspaces
    coeff = np.linalg.solve(left.conj().T @ right, left.conj().T @ vec(np.eye(n) / n))
    state = _to_state(unvec(right @ coeff, n))
    basis = _hermitian_basis([unvec(c, n) for c in right.T])
    residual = float(np.max(np.abs(channel(state) - state)))
    return FixedStateReport(mult, near, basis, state, residual, "dense-eig")


@dataclass(frozen=True, eq=False)
class PowerIterationResult:
    state: np.ndarray
    steps: int
    converged: bool
    residual: float


def _as_step(op) -> Callable:
    if isinstance(op, MixedQIFS):
        return op.averaged_map
    if callable(op):
        return op
    raise TypeError(f"cannot iterate {type(op).__name__}")


def power_iteration(op, rho0, max_steps: int = 10_000, tol: float = 1e-12) -> PowerIterationResult:
    """Iterate ``rho <- op(rho)`` until ``D_tr(op(rho), rho) < tol``.

    ``op`` may be a channel, a superoperator, a :class:`MixedQIFS` (its
    averaged map ``sum_i p_i(rho) G_i(rho)`` is iterated) or any callable.
    ``residual`` is the trace distance of the last step.
    """
    step = _as_step(op)
    rho = as_matrix(rho0)
    d = np.inf
    for k in range(1, max_steps + 1):
        new = _hermitize(step(rho))
        d = trace_distance(new, rho)
        rho = new
        if d < tol:
            return PowerIterationResult(rho, k, True, float(d))
    return PowerIterationResult(rho, max_steps, False, float(d))


# ---------------------------------------------------------------------------
# Commutant and block structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CommutantReport:
    dim: int
    basis: tuple
    blocks: tuple
    transform: np.ndarray
    off_block: float = 0.0

    @property
    def reducible(self) -> bool:
        return self.dim > 1

    @property
    def verdict(self) -> str:
        return "reducible" if self.reducible else "irreducible"

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "verdict": self.verdict,
            "blocks": [list(map(int, b)) for b in self.blocks],
            "transform": matrix_to_json(self.transform),
            "off_block": self.off_block,
            "basis": [matrix_to_json(b) for b in self.basis],
        }


def _check_unitaries(unitaries) -> list:
    us = [np.asarray(u, dtype=complex) for u in unitaries]
    if not us:
        raise ValueError("at least one unitary is required")
    if len({u.shape for u in us}) != 1:
        raise DimensionError("unitaries have different sizes")
    for u in us:
        if not is_unitary(u):
            raise InvalidStateError("commutant analysis needs unitary operators")
    return us


def _cluster(w: np.ndarray, gap: float) -> list:
    groups, cur = [], [0]
    for i in range(1, len(w)):
        if w[i] - w[i - 1] > gap:
            groups.append(cur)
            cur = []
        cur.append(i)
    groups.append(cur)
    return groups


def commutant(unitaries, tol: float = COMMUTANT_TOL, seed=0) -> CommutantReport:
    """Matrices commuting with every ``U_i``, and the common invariant blocks.

    The commutant is the null space of the stacked ``1 (x) U_i - U_i^T (x) 1``.
    Blocks are eigenspaces of a random Hermitian commutant element.
    """
    us = _check_unitaries(unitaries)
    n = us[0].shape[0]
    eye = np.eye(n)
    stack = np.vstack([np.kron(eye, u) - np.kron(u.T, eye) for u in us])
    _, s, vh = np.linalg.svd(stack)
    s_full = np.zeros(n * n)
    s_full[: len(s)] = s
    null = vh[s_full < tol].conj()
    basis = tuple(unvec(v, n) for v in null)
    dim = len(basis)
    if dim == 0:
        raise ConvergenceError("empty commutant; the identity should always commute")
    if dim == 1:
        return CommutantReport(1, basis, (tuple(range(n)),), np.eye(n, dtype=complex))

    rng = np.random.default_rng(seed)
    herm = _hermitian_basis(basis)
    for _ in range(5):
        h = sum(c * b for c, b in zip(rng.standard_normal(len(herm)), herm))
        w, q = np.linalg.eigh(h)
        scale = max(1.0, float(np.max(np.abs(w))))
        gaps = np.diff(w) / scale
        # gaps strictly between degenerate and well separated are ambiguous
        if not np.any((gaps > 1e-10) & (gaps < BLOCK_GAP)):
            break
    groups = _cluster(w / scale, BLOCK_GAP)
    mask = np.zeros((n, n), dtype=bool)
    for g in groups:
        mask[np.ix_(g, g)] = True
    off = max(float(np.max(np.abs((q.conj().T @ u @ q)[~mask]), initial=0.0)) for u in us)
    return CommutantReport(dim, basis, tuple(tuple(g) for g in groups), q, off)


@dataclass(frozen=True)
class UniquenessVerdict:
    unique: bool
    commutant_dim: int
    multiplicity: int | None

    @property
    def consistent(self) -> bool:
        return self.multiplicity is None or (self.multiplicity == 1) == self.unique


def uniqueness_verdict(probs, unitaries, tol: float = COMMUTANT_TOL) -> UniquenessVerdict:
    """Unique invariant state iff the unitaries are not common block-diagonal.

    Requires all ``p_i > 0``.  The fixed-space multiplicity of the induced
    random external field is reported alongside as a cross-check.
    """
    p = np.asarray(probs, dtype=float)
    if np.any(p <= 0):
        raise PreconditionError("the uniqueness criterion needs strictly positive probabilities")
    report = commutant(unitaries, tol)
    ch = random_external_field(p, unitaries)
    mult = fixed_states(ch, tol).multiplicity if ch.dim <= DENSE_MAX_DIM else None
    return UniquenessVerdict(report.dim == 1, report.dim, mult)


def block_diagonal_invariant_state(report: CommutantReport, weights=None) -> np.ndarray:
    """Direct sum ``(+)_j (sigma_j / alpha_j) 1_{alpha_j}`` in the block basis.

    ``weights`` are the block masses ``sigma_j`` (default equal); each block
    carries the normalized identity on its ``alpha_j``-dimensional subspace.
    """
    k = len(report.blocks)
    sigma = np.full(k, 1.0 / k) if weights is None else np.asarray(weights, dtype=float)
    if len(sigma) != k or np.any(sigma < 0) or abs(sigma.sum() - 1.0) > 1e-12:
        raise PreconditionError("block weights must be a distribution over the blocks")
    diag = np.zeros(report.transform.shape[0])
    for s, block in zip(sigma, report.blocks):
        diag[list(block)] = s / len(block)
    q = report.transform
    return _hermitize((q * diag) @ q.conj().T)


@dataclass(frozen=True)
class Lemma1Result:
    precondition_met: bool
    upper_max: float
    opposite_max: float
    bound: float

    @property
    def holds(self) -> bool | None:
        return None if not self.precondition_met else self.opposite_max <= self.bound


def lemma1_validate(u, subset, tol: float = 1e-10) -> Lemma1Result:
    """For unitary ``U`` with ``U[A, B] = 0``, measure ``max |U[B, A]|``.

    ``subset`` lists the 0-based indices of ``A``; ``B`` is its complement.
    The opposite block must vanish within ``sqrt(N) * tol``.
    """
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u):
        raise InvalidStateError("matrix is not unitary")
    n = u.shape[0]
    a = sorted(set(int(i) for i in subset))
    b = [i for i in range(n) if i not in a]
    if not a or not b:
        raise PreconditionError("subset must be a nonempty proper subset of the indices")
    upper = float(np.max(np.abs(u[np.ix_(a, b)])))
    opposite = float(np.max(np.abs(u[np.ix_(b, a)])))
    return Lemma1Result(upper <= tol, upper, opposite, float(np.sqrt(n) * tol))
