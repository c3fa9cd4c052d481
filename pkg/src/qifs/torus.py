"""Torus quantization: DFT bases, the quantum tartan, torus coherent states and Husimi grids.

Conventions (0-based labels):

* ``|l>_p = sum_j W_lj |j>_q`` with ``W_lj = exp(-2 pi i l j / N) / sqrt(N)``.
  ``W`` is symmetric, so its columns are the momentum kets in the
  position basis and an operator ``B`` written in momentum labels acts as
  ``W B W^dagger`` in position labels.
* ``X|j> = |j+1 mod N>`` and ``Y|l>_p = |l+1 mod N>_p``, which makes
  ``Y = diag(exp(-2 pi i j / N))`` and ``Y X = exp(-2 pi i / N) X Y``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, LinearOperator, eigs

from .errors import ConvergenceError, DimensionError
from .export import HusimiGrid
from .qstate import as_matrix, trace_distance

DENSE_TARTAN_MAX = 12
Mode = Literal["linear-spectral", "nonlinear-normalized"]


def dft_matrix(n: int) -> np.ndarray:
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


@dataclass(frozen=True)
class TorusBasis:
    L: int

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise DimensionError(f"L must be a positive integer, got {self.L}")

    @property
    def dim(self) -> int:
        return 3 * self.L

    @property
    def W(self) -> np.ndarray:
        return dft_matrix(self.dim)

    def position(self, j: int) -> np.ndarray:
        ket = np.zeros(self.dim, dtype=complex)
        ket[j % self.dim] = 1.0
        return ket

    def momentum(self, l: int) -> np.ndarray:
        return self.W[l % self.dim].copy()


def momentum_basis(n: int) -> np.ndarray:
    """Momentum kets as columns, in position coordinates."""
    return dft_matrix(n).T


def _contraction(L: int, first_target: int) -> np.ndarray:
    """``sum_i sum_m |first_target + i><3i + m|``: squeeze all N labels into L of them."""
    n = 3 * L
    a = np.zeros((n, n), dtype=complex)
    for i in range(L):
        a[first_target + i, 3 * i:3 * i + 3] = 1.0
    return a


@dataclass(frozen=True, eq=False)
class TartanChannel:
    """Four contractions: ``A_1, A_2`` in position labels, ``A_3, A_4`` their momentum analogues."""

    L: int
    ops: tuple
    position_forms: tuple

    @property
    def dim(self) -> int:
        return 3 * self.L

    def linear_map(self, rho) -> np.ndarray:
        """``(1/4) sum_i A_i rho A_i^dagger`` (not trace preserving)."""
        r = as_matrix(rho) if np.ndim(rho) != 2 else np.asarray(rho)
        return sum(a @ r @ a.conj().T for a in self.ops) / 4

    def branch(self, i: int, rho) -> np.ndarray:
        """``G_i(rho) = A_i rho A_i^dagger / tr(A_i rho A_i^dagger)``."""
        a = self.ops[i]
        out = a @ np.asarray(rho) @ a.conj().T
        tr = np.trace(out).real
        if tr <= 1e-300:
            raise ConvergenceError(f"tartan branch {i + 1} annihilated the state")
        return out / tr

    def nonlinear_map(self, rho) -> np.ndarray:
        """``(1/4) sum_i G_i(rho)`` with per-branch trace renormalization."""
        r = np.asarray(rho)
        return sum(self.branch(i, r) for i in range(4)) / 4

    def superoperator(self) -> np.ndarray:
        return sum(np.kron(a.conj(), a) for a in self.ops) / 4


def tartan_operators(L: int) -> TartanChannel:
    """Tartan maps for ``N = 3L``: thirds in position (``x/3``, ``x/3 + 2/3``) and in momentum."""
    basis = TorusBasis(L)
    w = basis.W
    a1 = _contraction(L, 0)
    a2 = _contraction(L, 2 * L)
    a3 = w @ a1 @ w.conj().T
    a4 = w @ a2 @ w.conj().T
    return TartanChannel(L, (a1, a2, a3, a4), (a1, a2))


def _psd_state(m: np.ndarray) -> np.ndarray:
    h = 0.5 * (m + m.conj().T)
    if np.trace(h).real < 0:
        h = -h
    w, v = np.linalg.eigh(h)
    w = np.clip(w, 0.0, None)
    out = (v * (w / w.sum())) @ v.conj().T
    return 0.5 * (out + out.conj().T)


@dataclass(frozen=True, eq=False)
class TartanInvariant:
    state: np.ndarray
    mode: str
    method: str
    eigenvalue: complex | None
    residual: float
    steps: int

    def to_json(self) -> dict:
        ev = None if self.eigenvalue is None else [self.eigenvalue.real, self.eigenvalue.imag]
        return {"mode": self.mode, "method": self.method, "eigenvalue": ev,
                "residual": self.residual, "steps": self.steps, "N": int(self.state.shape[0])}


def _normalized_residual(ch: TartanChannel, rho: np.ndarray, mode: str) -> float:
    if mode == "linear-spectral":
        img = ch.linear_map(rho)
        img = img / np.trace(img).real
    else:
        img = ch.nonlinear_map(rho)
    return float(np.max(np.abs(img - rho)))


def _linear_power(ch: TartanChannel, rho, max_steps: int, tol: float):
    for k in range(1, max_steps + 1):
        img = ch.linear_map(rho)
        lam = np.trace(img).real
        img = img / lam
        d = trace_distance(img, rho)
        rho = img
        if d < tol:
            return rho, lam, k
    raise ConvergenceError(f"tartan power iteration did not reach {tol:g} in {max_steps} steps")


def tartan_invariant(
    ch: TartanChannel,
    mode: Mode = "linear-spectral",
    tol: float = 1e-10,
    max_steps: int = 10_000,
    damping: float = 0.5,
) -> TartanInvariant:
    """Invariant state of the tartan QIFS.

    ``linear-spectral``: leading eigenvector of the linear map, made Hermitian,
    PSD-clipped and trace-normalized.  Dense eigensolve for ``N <= 12``,
    ARPACK above, plain power iteration if ARPACK fails.

    ``nonlinear-normalized``: damped fixed-point iteration
    ``rho <- (1 - eta) rho + eta * (1/4) sum_i G_i(rho)`` until successive
    iterates differ by less than ``tol`` in trace distance.
    """
    n = ch.dim
    start = np.eye(n, dtype=complex) / n
    if mode == "linear-spectral":
        if n <= DENSE_TARTAN_MAX:
            w, v = np.linalg.eig(ch.superoperator())
            k = int(np.argmax(np.abs(w)))
            rho, lam, method, steps = _psd_state(v[:, k].reshape(n, n, order="F")), w[k], "dense-eig", 0
        else:
            op = LinearOperator(
                (n * n, n * n), dtype=complex,
                matvec=lambda x: ch.linear_map(x.reshape(n, n, order="F")).reshape(-1, order="F"))
            try:
                w, v = eigs(op, k=1, which="LM", v0=start.reshape(-1, order="F"), tol=tol)
                rho, lam, method, steps = _psd_state(v[:, 0].reshape(n, n, order="F")), w[0], "arpack", 0
            except (ArpackNoConvergence, ArpackError):
                rho, lam, steps = _linear_power(ch, start, max_steps, tol)
                rho, method = _psd_state(rho), "power-iteration"
        return TartanInvariant(rho, mode, method, complex(lam),
                               _normalized_residual(ch, rho, mode), steps)
    if mode == "nonlinear-normalized":
        rho = start
        for k in range(1, max_steps + 1):
            new = (1 - damping) * rho + damping * ch.nonlinear_map(rho)
            new = 0.5 * (new + new.conj().T)
            d = trace_distance(new, rho)
            rho = new
            if d < tol:
                rho = _psd_state(rho)
                return TartanInvariant(rho, mode, "damped-iteration", None,
                                       _normalized_residual(ch, rho, mode), k)
        raise ConvergenceError(f"nonlinear tartan iteration did not reach {tol:g} in {max_steps} steps")
    raise ValueError(f"unknown tartan mode {mode!r}")


# ---------------------------------------------------------------------------
# Coherent states and Husimi grids
# ---------------------------------------------------------------------------

def reference_state(n: int) -> np.ndarray:
    """Gaussian ``exp(-pi (k - N/2)^2 / N - i pi k)`` centred at ``(1/2, 1/2)``, unit norm."""
    k = np.arange(n)
    ket = np.exp(-np.pi * (k - n / 2) ** 2 / n - 1j * np.pi * k)
    return ket / np.linalg.norm(ket)


def shift_operators(n: int) -> tuple:
    """``(X, Y)``: cyclic shifts in position and in momentum labels."""
    x = np.roll(np.eye(n, dtype=complex), 1, axis=0)
    w = dft_matrix(n)
    return x, w @ x @ w.conj().T


def _shift(value: float, n: int) -> int:
    # round half up, so exact halves do not depend on banker's rounding
    return int(np.floor(n * value - n / 2 + 0.5))


def coherent_torus(q: float, p: float, n: int) -> np.ndarray:
    """``|q,p> = Y^b X^a |kappa>`` with ``a, b`` the rounded ``Nq - N/2`` and ``Np - N/2``."""
    a, b = _shift(q, n), _shift(p, n)
    ket = np.roll(reference_state(n), a)
    return np.exp(-2j * np.pi * b * np.arange(n) / n) * ket


def husimi_torus(rho, resolution: int = 27) -> HusimiGrid:
    """``(1 / 2 pi) <q,p| rho |q,p>`` at cell centres; rows index ``q``, columns ``p``."""
    r = as_matrix(rho)
    n = r.shape[0]
    m = int(resolution)
    centres = (np.arange(m) + 0.5) / m
    bs = np.array([_shift(c, n) for c in centres])
    kappa = reference_state(n)
    phases = np.exp(-2j * np.pi * np.outer(np.arange(n), bs) / n)  # (N, M)
    vals = np.empty((m, m))
    for row, qc in enumerate(centres):
        kets = np.roll(kappa, _shift(qc, n))[:, None] * phases
        vals[row] = np.real(np.sum(kets.conj() * (r @ kets), axis=0))
    vals = np.clip(vals / (2 * np.pi), 0.0, None)
    return HusimiGrid(vals, {"N": n, "M": m, "normalization": 1 / (2 * np.pi)})


def excluded_mask(m: int) -> np.ndarray:
    """Cells whose ``q`` or ``p`` centre lies in the open middle third."""
    c = (np.arange(m) + 0.5) / m
    mid = (c > 1 / 3) & (c < 2 / 3)
    return mid[:, None] | mid[None, :]


def excluded_mass(grid: HusimiGrid) -> float:
    """Fraction of Husimi mass over the classically excluded cross."""
    return float(grid.mass()[excluded_mask(grid.shape[0])].sum())


def position_profile(rho) -> np.ndarray:
    """Diagonal of ``rho`` in the position basis."""
    return np.real(np.diag(as_matrix(rho))).copy()


def matched_cantor_level(n: int) -> int:
    """Cantor refinement resolvable at ``N``: coherent widths are ``~ N^(-1/2)``, so ``floor(log_3(N) / 2)``."""
    return int(np.floor(np.log(n) / np.log(3) / 2 + 1e-9))
