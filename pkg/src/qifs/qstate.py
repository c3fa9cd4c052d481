"""Quantum states, distances between them, entropy and partial trace.

Every routine accepts plain numpy arrays as well as the wrapper types
defined here, so the heavy numerical code elsewhere in the package can work
on raw ``ndarray`` objects and only validate at its boundaries.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.stats import unitary_group

from .errors import DimensionError, InvalidStateError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
NORM_TOL = 1e-12
EIG_CUTOFF = 1e-12


# ---------------------------------------------------------------------------
# Pure states
# ---------------------------------------------------------------------------

def normalize(vector) -> np.ndarray:
    """Return ``vector`` scaled to unit Euclidean norm."""
    v = np.asarray(vector, dtype=complex).reshape(-1)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise InvalidStateError("cannot normalize the zero vector")
    return v / norm


class PureState:
    """A ray in Hilbert space, stored as a unit-norm representative ket.

    Equality ignores the global phase: two states are equal iff
    ``|<a|b>| = 1`` within ``1e-10``.
    """

    __slots__ = ("_ket",)

    def __init__(self, amplitudes):
        ket = normalize(amplitudes)
        ket.setflags(write=False)
        self._ket = ket

    @property
    def ket(self) -> np.ndarray:
        return self._ket

    @property
    def dim(self) -> int:
        return self._ket.shape[0]

    def projector(self) -> np.ndarray:
        return np.outer(self._ket, self._ket.conj())

    def overlap(self, other) -> complex:
        other = as_ket(other)
        if other.shape != self._ket.shape:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.shape[0]}")
        return complex(np.vdot(self._ket, other))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PureState) or other.dim != self.dim:
            return NotImplemented
        return abs(abs(self.overlap(other)) - 1.0) <= 1e-10

    def __hash__(self):
        raise TypeError("PureState is unhashable (equality is phase-invariant)")

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._ket, dtype=dtype)

    def __repr__(self) -> str:
        return f"PureState(dim={self.dim})"

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(self.projector())


def as_ket(state) -> np.ndarray:
    if isinstance(state, PureState):
        return state.ket
    return normalize(state)


# ---------------------------------------------------------------------------
# Mixed states
# ---------------------------------------------------------------------------

def validate_density(matrix, *, clip: bool = True) -> np.ndarray:
    """Check the density-matrix contract and return a cleaned copy.

    Small Hermiticity defects (below ``HERMITIAN_TOL``) are symmetrized away
    and eigenvalues in ``[-PSD_TOL, 0)`` are clipped to zero; anything worse
    raises :class:`InvalidStateError`.
    """
    rho = np.array(matrix, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError(f"density matrix must be square, got shape {rho.shape}")
    herm_err = np.max(np.abs(rho - rho.conj().T)) if rho.size else 0.0
    if herm_err > HERMITIAN_TOL:
        raise InvalidStateError(f"matrix is not Hermitian (max defect {herm_err:.3g})")
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvalidStateError(f"trace is {tr!r}, expected 1")
    w, v = np.linalg.eigh(rho)
    if w[0] < -PSD_TOL:
        raise InvalidStateError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3g})")
    if clip and w[0] < 0:
        w = np.clip(w, 0.0, None)
        rho = (v * (w / w.sum())) @ v.conj().T
        rho = 0.5 * (rho + rho.conj().T)
    return rho


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix (validated on construction)."""

    matrix: np.ndarray

    def __post_init__(self):
        rho = validate_density(self.matrix)
        rho.setflags(write=False)
        object.__setattr__(self, "matrix", rho)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_ket(cls, ket) -> "DensityMatrix":
        v = as_ket(ket)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim) / dim)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"

    def to_json(self) -> dict:
        return matrix_to_json(self.matrix)

    @classmethod
    def from_json(cls, doc) -> "DensityMatrix":
        return cls(matrix_from_json(doc))


def as_matrix(state) -> np.ndarray:
    """Return a complex ndarray for a DensityMatrix, PureState or array."""
    if isinstance(state, DensityMatrix):
        return state.matrix
    if isinstance(state, PureState):
        return state.projector()
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        v = normalize(arr)
        return np.outer(v, v.conj())
    return arr


def is_density_matrix(matrix, tol: float = 1e-10) -> bool:
    rho = np.asarray(matrix)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        return False
    if abs(np.trace(rho) - 1) > tol:
        return False
    return np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] >= -tol


# ---------------------------------------------------------------------------
# JSON layout {"dim": N, "re": [[...]], "im": [[...]]}
# ---------------------------------------------------------------------------

def matrix_to_json(matrix) -> dict:
    m = np.asarray(matrix, dtype=complex)
    return {"dim": int(m.shape[0]), "re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(doc) -> np.ndarray:
    if isinstance(doc, str):
        doc = json.loads(doc)
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
    if re.shape != im.shape:
        raise DimensionError("re and im parts have different shapes")
    m = re + 1j * im
    if "dim" in doc and m.shape[0] != int(doc["dim"]):
        raise DimensionError(f"declared dim {doc['dim']} does not match data shape {m.shape}")
    return m


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

StateLike = Union[np.ndarray, DensityMatrix, PureState]


def _pair(a, b):
    ra, rb = as_matrix(a), as_matrix(b)
    if ra.shape != rb.shape:
        raise DimensionError(f"dimension mismatch: {ra.shape} vs {rb.shape}")
    return ra, rb


def fubini_study(a, b) -> float:
    """Fubini-Study distance ``arccos |<a|b>|`` between two pure states."""
    ka, kb = as_ket(a), as_ket(b)
    if ka.shape != kb.shape:
        raise DimensionError(f"dimension mismatch: {ka.shape[0]} vs {kb.shape[0]}")
    ov = min(abs(np.vdot(ka, kb)), 1.0)
    return float(np.arccos(ov))


def hs_distance(rho1, rho2) -> float:
    """Hilbert-Schmidt distance ``sqrt(tr (rho1 - rho2)^2)``."""
    r1, r2 = _pair(rho1, rho2)
    d = r1 - r2
    return float(np.sqrt(max(np.real(np.vdot(d, d)), 0.0)))


def trace_distance(rho1, rho2) -> float:
    """Trace norm of the difference (no factor 1/2)."""
    r1, r2 = _pair(rho1, rho2)
    d = r1 - r2
    return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))


def _check_hermitian(m, name):
    if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
        raise InvalidStateError(f"{name} is not Hermitian")


def psd_sqrt(matrix) -> np.ndarray:
    """Square root of a Hermitian PSD matrix, negative eigenvalues clipped to 0."""
    m = np.asarray(matrix, dtype=complex)
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    w = np.where(w < EIG_CUTOFF, 0.0, w)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity_root(rho1, rho2) -> float:
    """``tr sqrt(sqrt(rho1) rho2 sqrt(rho1))`` (root fidelity)."""
    r1, r2 = _pair(rho1, rho2)
    _check_hermitian(r1, "rho1")
    _check_hermitian(r2, "rho2")
    s = psd_sqrt(r1)
    inner = s @ r2 @ s
    w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))))


def bures_distance(rho1, rho2) -> float:
    """Bures distance ``sqrt(2 (1 - F^(1/2)))``."""
    f = fidelity_root(rho1, rho2)
    return float(np.sqrt(max(2.0 * (1.0 - f), 0.0)))


def von_neumann_entropy(rho) -> float:
    """``-tr(rho ln rho)`` in nats, eigenvalues below 1e-12 dropped."""
    r = as_matrix(rho)
    w = np.linalg.eigvalsh(0.5 * (r + r.conj().T))
    w = w[w > EIG_CUTOFF]
    return float(max(-np.sum(w * np.log(w)), 0.0))


# ---------------------------------------------------------------------------
# Partial trace
# ---------------------------------------------------------------------------

def partial_trace(sigma, dims, trace_out: str = "B") -> np.ndarray:
    """Reduced state of a bipartite operator on ``H_A (x) H_B``.

    ``dims = (N, m)`` gives the factor dimensions; ``trace_out`` names the
    subsystem that is traced away (``"A"`` or ``"B"``).
    """
    n, m = (int(d) for d in dims)
    s = as_matrix(sigma)
    if s.shape != (n * m, n * m):
        raise DimensionError(f"matrix of shape {s.shape} does not factor as {n}x{m}")
    t = s.reshape(n, m, n, m)
    if trace_out == "B":
        return np.einsum("ajbj->ab", t)
    if trace_out == "A":
        return np.einsum("iaib->ab", t)
    raise ValueError(f"trace_out must be 'A' or 'B', not {trace_out!r}")


# ---------------------------------------------------------------------------
# Random sampling helpers
# ---------------------------------------------------------------------------

def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_ket(dim: int, seed=None) -> np.ndarray:
    """Haar-random unit vector."""
    rng = _rng(seed)
    return normalize(rng.normal(size=dim) + 1j * rng.normal(size=dim))


def random_density_matrix(dim: int, seed=None, rank: int | None = None) -> np.ndarray:
    """Hilbert-Schmidt (Ginibre) random density matrix."""
    rng = _rng(seed)
    k = dim if rank is None else rank
    g = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def haar_unitary(dim: int, seed=None) -> np.ndarray:
    """Haar-distributed unitary matrix."""
    if dim == 1:
        rng = _rng(seed)
        return np.array([[np.exp(2j * np.pi * rng.random())]])
    return unitary_group.rvs(dim, random_state=_rng(seed))


def is_unitary(u, tol: float = 1e-10) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.max(
        np.abs(u.conj().T @ u - np.eye(u.shape[0]))
    ) <= tol
