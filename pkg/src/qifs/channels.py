"""Quantum IFSs on pure and mixed states, and the Kraus channels they induce."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import DimensionError, InvalidStateError, PreconditionError
from .qstate import (
    PureState,
    as_ket,
    as_matrix,
    haar_unitary,
    is_density_matrix,
    is_unitary,
    matrix_from_json,
    matrix_to_json,
    partial_trace,
    random_density_matrix,
)

KRAUS_TOL = 1e-10
PROB_TOL = 1e-10
ZERO_PROB = 1e-15
ZERO_NORM = 1e-14

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _as_ops(ops) -> tuple:
    out = []
    for op in ops:
        a = np.array(op, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"operators must be square matrices, got shape {a.shape}")
        a.setflags(write=False)
        out.append(a)
    if not out:
        raise ValueError("at least one operator is required")
    if len({a.shape for a in out}) != 1:
        raise DimensionError("operators have different sizes")
    return tuple(out)


# ---------------------------------------------------------------------------
# Kraus channels
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """Linear map ``rho -> sum_j V_j rho V_j^dagger`` given by its Kraus operators."""

    kraus: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kraus", _as_ops(self.kraus))

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def tp_defect(self) -> float:
        s = sum(v.conj().T @ v for v in self.kraus)
        return float(np.max(np.abs(s - np.eye(self.dim))))

    @property
    def unital_defect(self) -> float:
        s = sum(v @ v.conj().T for v in self.kraus)
        return float(np.max(np.abs(s - np.eye(self.dim))))

    @property
    def trace_preserving(self) -> bool:
        return self.tp_defect <= KRAUS_TOL

    @property
    def unital(self) -> bool:
        return self.unital_defect <= KRAUS_TOL

    @property
    def bistochastic(self) -> bool:
        return self.trace_preserving and self.unital

    def __call__(self, rho) -> np.ndarray:
        r = as_matrix(rho)
        if r.shape != (self.dim, self.dim):
            raise DimensionError(f"state of shape {r.shape} given to a channel on dim {self.dim}")
        return sum(v @ r @ v.conj().T for v in self.kraus)

    def choi(self) -> np.ndarray:
        """Choi matrix ``sum_ab |a><b| (x) Lambda(|a><b|)``."""
        n = self.dim
        out = np.zeros((n * n, n * n), dtype=complex)
        for v in self.kraus:
            vec = v.T.reshape(-1)  # sum_a |a> (x) V|a>
            out += np.outer(vec, vec.conj())
        return out

    def is_completely_positive(self, tol: float = 1e-10) -> bool:
        """Diagnostic only: Kraus-form maps are CP by construction."""
        c = self.choi()
        return bool(np.linalg.eigvalsh(0.5 * (c + c.conj().T))[0] >= -tol)

    def to_json(self) -> dict:
        return {"dim": self.dim, "kind": "kraus", "kraus": [matrix_to_json(v) for v in self.kraus]}

    @classmethod
    def from_json(cls, doc: dict) -> "QuantumChannel":
        return cls([matrix_from_json(k) for k in doc["kraus"]])


def channel_apply(channel: QuantumChannel, rho) -> np.ndarray:
    """Apply a trace-preserving channel; the result is a density matrix."""
    if not channel.trace_preserving:
        raise PreconditionError(
            f"channel is not trace preserving (defect {channel.tp_defect:.3g})")
    out = channel(rho)
    return 0.5 * (out + out.conj().T)


def identity_channel(dim: int) -> QuantumChannel:
    return QuantumChannel([np.eye(dim)], "identity")


def unitary_channel(u) -> QuantumChannel:
    if not is_unitary(u):
        raise InvalidStateError("operator is not unitary")
    return QuantumChannel([u], "unitary")


def random_external_field(probs: Sequence[float], unitaries) -> QuantumChannel:
    """Apply ``U_i`` with probability ``p_i``; Kraus operators ``sqrt(p_i) U_i``."""
    p = np.asarray(probs, dtype=float)
    us = _as_ops(unitaries)
    if len(p) != len(us):
        raise DimensionError("need one probability per unitary")
    if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL:
        raise PreconditionError(f"probabilities {p.tolist()} are not a distribution")
    for u in us:
        if not is_unitary(u):
            raise InvalidStateError("random external fields need unitary operators")
    return QuantumChannel([np.sqrt(pi) * u for pi, u in zip(p, us)], "random-external-field")


def depolarizing(p: float) -> QuantumChannel:
    """Qubit channel ``(1-p) rho + (p/3) sum_k sigma_k rho sigma_k``."""
    if not 0.0 <= p <= 1.0:
        raise PreconditionError(f"error probability {p} outside [0, 1]")
    kraus = [np.sqrt(1 - p) * np.eye(2)] + [np.sqrt(p / 3) * s for s in PAULI]
    return QuantumChannel(kraus, f"depolarizing(p={p})")


def ancilla_channel(u, env_dim: int) -> QuantumChannel:
    """Reduced dynamics of a system coupled by ``u`` to a maximally mixed ancilla.

    ``u`` acts on ``H_N (x) H_m``.  Kraus operators are
    ``K_{mu nu} = m^{-1/2} (1 (x) <mu|) U (1 (x) |nu>)``.
    """
    u = np.asarray(u, dtype=complex)
    m = int(env_dim)
    if u.shape[0] % m or u.shape[0] != u.shape[1]:
        raise DimensionError(f"unitary of size {u.shape[0]} does not factor with environment {m}")
    if not is_unitary(u):
        raise InvalidStateError("coupling operator is not unitary")
    n = u.shape[0] // m
    t = u.reshape(n, m, n, m)  # t[a, mu, b, nu] = <a mu| U |b nu>
    kraus = [t[:, mu, :, nu] / np.sqrt(m) for mu in range(m) for nu in range(m)]
    return QuantumChannel(kraus, "ancilla")


def ancilla_reduced_state(u, rho, env_dim: int) -> np.ndarray:
    """Direct evaluation ``tr_B U (rho (x) 1/m) U^dagger``."""
    r = as_matrix(rho)
    m = int(env_dim)
    sigma = np.kron(r, np.eye(m) / m)
    u = np.asarray(u)
    return partial_trace(u @ sigma @ u.conj().T, (r.shape[0], m), trace_out="B")


def random_channel(dim: int, n_kraus: int, seed=None) -> QuantumChannel:
    """Kraus operators cut from a Haar-random isometry ``C^N -> C^(kN)``."""
    big = haar_unitary(dim * n_kraus, seed)[:, :dim]
    return QuantumChannel([big[i * dim:(i + 1) * dim] for i in range(n_kraus)], "random")


# ---------------------------------------------------------------------------
# Pure-state QIFS
# ---------------------------------------------------------------------------

def pure_map(v, phi) -> np.ndarray:
    """``V|phi> / ||V|phi>||``."""
    out = np.asarray(v) @ as_ket(phi)
    norm = np.linalg.norm(out)
    if norm <= ZERO_NORM:
        raise PreconditionError("image of the state is numerically zero")
    return out / norm


def pure_probability(w, phi) -> float:
    """``||W|phi>||^2``."""
    out = np.asarray(w) @ as_ket(phi)
    return float(np.real(np.vdot(out, out)))


@dataclass(frozen=True, eq=False)
class PureQIFS:
    """Maps ``F_i`` from invertible ``V_i``, probabilities from ``W_i`` with ``sum W^dag W = 1``."""

    V: tuple
    W: tuple

    def __post_init__(self):
        v, w = _as_ops(self.V), _as_ops(self.W)
        if len(v) != len(w) or v[0].shape != w[0].shape:
            raise DimensionError("V and W must be equally many operators of equal size")
        for op in v:
            if np.linalg.svd(op, compute_uv=False)[-1] <= 1e-12:
                raise InvalidStateError("every V_i must be invertible")
        defect = np.max(np.abs(sum(x.conj().T @ x for x in w) - np.eye(w[0].shape[0])))
        if defect > KRAUS_TOL:
            raise InvalidStateError(f"W operators do not resolve the identity (defect {defect:.3g})")
        object.__setattr__(self, "V", v)
        object.__setattr__(self, "W", w)

    @property
    def dim(self) -> int:
        return self.V[0].shape[0]

    @property
    def k(self) -> int:
        return len(self.V)

    def probabilities(self, phi) -> np.ndarray:
        ket = as_ket(phi)
        return np.array([pure_probability(w, ket) for w in self.W])

    def apply(self, i: int, phi) -> np.ndarray:
        return pure_map(self.V[i], phi)


# ---------------------------------------------------------------------------
# Mixed-state QIFS
# ---------------------------------------------------------------------------

def mixed_map(v, rho) -> np.ndarray:
    """``V rho V^dag / tr(V rho V^dag)``."""
    v = np.asarray(v)
    out = v @ as_matrix(rho) @ v.conj().T
    tr = np.trace(out).real
    if tr <= ZERO_NORM:
        raise PreconditionError("trace of the transformed state vanishes")
    out = out / tr
    return 0.5 * (out + out.conj().T)


def mixed_probability(effect, rho) -> float:
    """``tr(L rho)`` for a positive effect operator ``L``."""
    return float(np.real(np.trace(np.asarray(effect) @ as_matrix(rho))))


@dataclass(frozen=True, eq=False)
class Conjugation:
    """Transformer ``rho -> V rho V^dag / tr(V rho V^dag)``."""

    V: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "V", _as_ops([self.V])[0])

    def __call__(self, rho):
        return mixed_map(self.V, rho)


@dataclass(frozen=True, eq=False)
class Homothety:
    """Affine contraction ``rho -> ratio * rho + (1 - ratio) * fixed`` toward a fixed state."""

    fixed: np.ndarray
    ratio: float = 1 / 3

    def __post_init__(self):
        object.__setattr__(self, "fixed", _as_ops([self.fixed])[0])

    def __call__(self, rho):
        return self.ratio * as_matrix(rho) + (1 - self.ratio) * self.fixed


@dataclass(frozen=True)
class ConstantProbability:
    value: float

    def __call__(self, rho) -> float:
        return self.value


@dataclass(frozen=True, eq=False)
class EffectProbability:
    """``p(rho) = tr(L rho)``."""

    effect: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "effect", _as_ops([self.effect])[0])

    def __call__(self, rho) -> float:
        return mixed_probability(self.effect, rho)


@dataclass(frozen=True, eq=False)
class MixedQIFS:
    """Density-matrix transformers ``G_i`` with state-dependent probabilities ``p_i``."""

    maps: tuple
    probs: tuple
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        object.__setattr__(self, "probs", tuple(
            ConstantProbability(float(p)) if isinstance(p, (int, float)) else p for p in self.probs))
        if len(self.maps) != len(self.probs):
            raise DimensionError("need one probability per map")

    @property
    def k(self) -> int:
        return len(self.maps)

    def probabilities(self, rho) -> np.ndarray:
        return np.array([p(rho) for p in self.probs])

    def averaged_map(self, rho) -> np.ndarray:
        """``sum_i p_i(rho) G_i(rho)``, skipping maps whose weight vanishes."""
        r = as_matrix(rho)
        out = np.zeros_like(r)
        for g, p in zip(self.maps, self.probabilities(r)):
            if p > ZERO_PROB:
                out = out + p * g(r)
        return out

    def check(self, samples: int = 20, seed=0) -> float:
        """Max probability-sum defect over random states; raises on violations."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(samples):
            rho = random_density_matrix(self.dim, rng)
            p = self.probabilities(rho)
            worst = max(worst, abs(p.sum() - 1.0))
            if np.any(p < -PROB_TOL):
                raise InvalidStateError("negative probability")
            for g, pi in zip(self.maps, p):
                if pi > ZERO_PROB and not is_density_matrix(g(rho)):
                    raise InvalidStateError(f"transformer {g!r} left the state space")
        if worst > PROB_TOL:
            raise InvalidStateError(f"probabilities sum to 1 +- {worst:.3g}")
        return worst


@dataclass(frozen=True, eq=False)
class HomogeneousQIFS:
    """QIFS with ``W_i = V_i``; it induces the channel ``sum_i V_i rho V_i^dag``."""

    V: tuple
    name: str = ""
    weights: tuple | None = None
    unitaries: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "V", _as_ops(self.V))
        if self.unitaries is not None:
            object.__setattr__(self, "unitaries", _as_ops(self.unitaries))
            object.__setattr__(self, "weights", tuple(float(p) for p in self.weights))

    @property
    def dim(self) -> int:
        return self.V[0].shape[0]

    @property
    def channel(self) -> QuantumChannel:
        return QuantumChannel(self.V, self.name)

    def as_pure(self) -> PureQIFS:
        return PureQIFS(self.V, self.V)

    def as_mixed(self) -> MixedQIFS:
        return MixedQIFS([Conjugation(v) for v in self.V],
                         [EffectProbability(v.conj().T @ v) for v in self.V], self.dim)

    @classmethod
    def from_unitaries(cls, probs, unitaries, name: str = "") -> "HomogeneousQIFS":
        """Random external field: ``V_i = sqrt(p_i) U_i``, keeping the ``U_i`` for commutant tests."""
        return cls(random_external_field(probs, unitaries).kraus, name, tuple(probs), tuple(unitaries))


def homothety_qifs(rho1, rho2, ratio: float = 1 / 3) -> MixedQIFS:
    """Two homotheties toward ``rho1`` and ``rho2``, chosen with probability 1/2 each."""
    r1, r2 = as_matrix(rho1), as_matrix(rho2)
    return MixedQIFS([Homothety(r1, ratio), Homothety(r2, ratio)], [0.5, 0.5], r1.shape[0])


def atomic_qifs(
    bz: float,
    period: float,
    pulse=None,
    p: float = 0.5,
    profile: Callable[[float], np.ndarray] | Sequence | None = None,
    slices: int = 64,
) -> HomogeneousQIFS:
    """Two-level atom in a field ``B_z`` hit by a resonant pulse with probability ``p``.

    Without the pulse the one-period propagator is ``exp(-i H0 T)`` with
    ``H0 = (B_z / 2) sigma_z``.  With the pulse it is ``exp(-i (H0 T + A))``
    where ``A`` is the integrated pulse matrix.  If ``profile`` is given
    instead (a callable ``t -> V(t)`` or a table of ``slices`` matrices at the
    slice midpoints), the time-ordered product is approximated by
    ``slices`` exponentials, later times to the left.
    """
    h0 = 0.5 * bz * PAULI[2]
    u1 = expm(-1j * h0 * period)
    if profile is None:
        a = np.zeros((2, 2), dtype=complex) if pulse is None else np.asarray(pulse, dtype=complex)
        if np.max(np.abs(a - a.conj().T)) > 1e-12:
            raise InvalidStateError("integrated pulse matrix must be Hermitian")
        u2 = expm(-1j * (h0 * period + a))
    else:
        dt = period / slices
        if callable(profile):
            table = [np.asarray(profile((s + 0.5) * dt), dtype=complex) for s in range(slices)]
        else:
            table = [np.asarray(v, dtype=complex) for v in profile]
            if len(table) != slices:
                raise DimensionError(f"pulse table has {len(table)} entries, expected {slices}")
        u2 = np.eye(2, dtype=complex)
        for v in table:
            u2 = expm(-1j * (h0 + v) * dt) @ u2
    return HomogeneousQIFS.from_unitaries([1 - p, p], [u1, u2], "atomic")


# ---------------------------------------------------------------------------
# Trajectories and barycenters
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Trajectory:
    """Visited states (kets of shape ``(n+1, N)`` or matrices ``(n+1, N, N)``) and chosen map indices."""

    states: np.ndarray
    indices: np.ndarray

    @property
    def pure(self) -> bool:
        return self.states.ndim == 2


def _select(probs: np.ndarray, u: float) -> int:
    acc = 0.0
    for i, p in enumerate(probs):
        if p >= ZERO_PROB:
            acc += p
            if u < acc:
                return i
    # u beyond the accumulated mass only through rounding: take the last live map
    live = np.nonzero(probs >= ZERO_PROB)[0]
    return int(live[-1])


def qifs_trajectory(qifs, state0, n: int, seed: int) -> Trajectory:
    """Random orbit of ``n`` steps; map ``i`` is drawn with probability ``p_i(state)``.

    ``qifs`` may be a :class:`PureQIFS` (``state0`` a ket), a
    :class:`MixedQIFS` (``state0`` a density matrix) or a
    :class:`HomogeneousQIFS` (either, chosen by the shape of ``state0``).
    """
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    if isinstance(qifs, HomogeneousQIFS):
        s0 = np.asarray(state0)
        qifs = qifs.as_pure() if s0.ndim == 1 or isinstance(state0, PureState) else qifs.as_mixed()
    idx = np.empty(n, dtype=np.int64)
    if isinstance(qifs, PureQIFS):
        ket = as_ket(state0)
        states = np.empty((n + 1, ket.shape[0]), dtype=complex)
        states[0] = ket
        for j in range(n):
            probs = qifs.probabilities(ket)
            if abs(probs.sum() - 1.0) > PROB_TOL:
                raise PreconditionError(f"probabilities sum to {probs.sum()!r}")
            i = _select(probs, u[j])
            ket = qifs.apply(i, ket)
            states[j + 1] = ket
            idx[j] = i
    elif isinstance(qifs, MixedQIFS):
        rho = as_matrix(state0)
        states = np.empty((n + 1,) + rho.shape, dtype=complex)
        states[0] = rho
        for j in range(n):
            probs = qifs.probabilities(rho)
            if abs(probs.sum() - 1.0) > PROB_TOL:
                raise PreconditionError(f"probabilities sum to {probs.sum()!r}")
            i = _select(probs, u[j])
            rho = qifs.maps[i](rho)
            states[j + 1] = rho
            idx[j] = i
    else:
        raise TypeError(f"cannot run a trajectory of {type(qifs).__name__}")
    return Trajectory(states, idx)


def barycenter_estimate(trajectory, burn_in: int = 0) -> np.ndarray:
    """Mean visited density matrix, skipping the first ``burn_in`` states.

    Pure states are averaged as projectors ``|phi><phi|``.
    """
    states = trajectory.states if isinstance(trajectory, Trajectory) else np.asarray(trajectory)
    states = states[burn_in:]
    if len(states) == 0:
        raise PreconditionError("no states left after burn-in")
    if states.ndim == 2:
        return states.T @ states.conj() / len(states)
    return states.mean(axis=0)
