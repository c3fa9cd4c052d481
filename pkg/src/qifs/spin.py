"""Spin-j quantization of sphere maps: rotations, the kicked top and spin coherent states."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from .channels import HomogeneousQIFS, MixedQIFS, PureQIFS, Conjugation, EffectProbability
from .errors import DimensionError
from .export import HusimiGrid
from .qstate import PureState, as_ket, as_matrix


def _two_j(j) -> int:
    tj = Fraction(j).limit_denominator(2) * 2
    if tj.denominator != 1 or tj < 1 or abs(float(tj) - 2 * float(j)) > 1e-12:
        raise DimensionError(f"spin j={j} must be a positive half-integer")
    return int(tj)


@dataclass(frozen=True)
class SpinBasis:
    """Basis ``|j, m>`` ordered ``m = j, j-1, ..., -j``."""

    j: float

    def __post_init__(self):
        object.__setattr__(self, "j", _two_j(self.j) / 2)

    @property
    def dim(self) -> int:
        return int(round(2 * self.j)) + 1

    @property
    def m(self) -> np.ndarray:
        return self.j - np.arange(self.dim)

    def state(self, m: float) -> np.ndarray:
        idx = int(round(self.j - m))
        if not 0 <= idx < self.dim or abs(self.j - m - idx) > 1e-12:
            raise DimensionError(f"m={m} is not a weight of spin {self.j}")
        ket = np.zeros(self.dim, dtype=complex)
        ket[idx] = 1.0
        return ket


@dataclass(frozen=True, eq=False)
class AngularMomentum:
    basis: SpinBasis
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray

    @property
    def j(self) -> float:
        return self.basis.j

    @property
    def dim(self) -> int:
        return self.basis.dim

    def component(self, axis: str) -> np.ndarray:
        try:
            return {"x": self.jx, "y": self.jy, "z": self.jz}[axis]
        except KeyError:
            raise ValueError(f"axis must be x, y or z, got {axis!r}") from None


def build_angular_momentum(j) -> AngularMomentum:
    """``J_z`` diagonal; ``J_x, J_y`` from the ladder operators (``hbar = 1``)."""
    basis = SpinBasis(j)
    m = basis.m
    # <m+1| J+ |m> sits on the superdiagonal since m decreases with the index
    jp = np.diag(np.sqrt(basis.j * (basis.j + 1) - m[1:] * (m[1:] + 1)), 1).astype(complex)
    jm = jp.conj().T
    return AngularMomentum(basis, (jp + jm) / 2, (jp - jm) / 2j, np.diag(m).astype(complex))


def _expih(h: np.ndarray, t: complex) -> np.ndarray:
    """``exp(t * h)`` for Hermitian ``h`` and purely imaginary ``t``."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(t * w)) @ v.conj().T


def rotation(axis: str, angle: float, j) -> np.ndarray:
    """``exp(+i angle J_axis)``."""
    am = build_angular_momentum(j)
    if axis == "z":
        return np.diag(np.exp(1j * angle * am.basis.m))
    return _expih(am.component(axis), 1j * angle)


def kicked_top(alpha: float, beta: float, j) -> np.ndarray:
    """``exp(-i beta J_z^2 / 2j) exp(-i alpha J_x)``."""
    am = build_angular_momentum(j)
    m = am.basis.m
    kick = np.exp(-1j * beta * m**2 / (2 * am.j))
    return kick[:, None] * _expih(am.jx, -1j * alpha)


def spin_coherent(j, theta: float, phi: float) -> np.ndarray:
    """``exp(-i phi J_z) exp(-i theta J_y) |j, j>``."""
    am = build_angular_momentum(j)
    top = am.basis.state(am.j)
    ket = _expih(am.jy, -1j * theta) @ top
    return np.exp(-1j * phi * am.basis.m) * ket


def coherent_table(j, theta, phi) -> np.ndarray:
    """Closed-form coherent kets for every ``(theta_a, phi_b)``; shape ``(A, B, N)``.

    Same states as :func:`spin_coherent`:
    ``<j,m|theta,phi> = sqrt(C(2j, j+m)) cos^(j+m)(theta/2) sin^(j-m)(theta/2) e^(-i m phi)``.
    """
    basis = SpinBasis(j)
    m = basis.m
    jj = basis.j
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    logc = 0.5 * (gammaln(2 * jj + 1) - gammaln(jj + m + 1) - gammaln(jj - m + 1))
    c = np.cos(theta / 2)[:, None]
    s = np.sin(theta / 2)[:, None]
    amp = np.exp(logc) * c ** (jj + m) * s ** (jj - m)  # (A, N)
    phase = np.exp(-1j * np.outer(phi, m))  # (B, N)
    return amp[:, None, :] * phase[None, :, :]


def expectation(op, state) -> float:
    if isinstance(state, PureState) or np.ndim(state) == 1:
        ket = as_ket(state)
        return float(np.real(np.vdot(ket, op @ ket)))
    return float(np.real(np.trace(op @ as_matrix(state))))


def latitude_effects(j) -> tuple:
    """Effects ``L_{1,2} = (1 +- J_z / j) / 2``, diagonal in the ``|j,m>`` basis."""
    basis = SpinBasis(j)
    d = basis.m / basis.j
    return np.diag((1 + d) / 2).astype(complex), np.diag((1 - d) / 2).astype(complex)


def latitude_probabilities(j, state) -> tuple:
    """``p_{1,2} = 1/2 +- <J_z> / 2j``."""
    basis = SpinBasis(j)
    jz = np.diag(basis.m)
    ez = expectation(jz, state)
    return 0.5 + ez / (2 * basis.j), 0.5 - ez / (2 * basis.j)


def rotation_qifs(theta1: float, theta2: float, j) -> HomogeneousQIFS:
    """``exp(i theta1 J_z)`` and ``exp(i theta2 J_x)`` with probability 1/2 each."""
    return HomogeneousQIFS.from_unitaries(
        [0.5, 0.5], [rotation("z", theta1, j), rotation("x", theta2, j)], "rotations")


def latitude_qifs(theta1: float, theta2: float, j, mixed: bool = False):
    """Rotations chosen with probabilities ``1/2 +- <J_z>/2j``.

    The pure form uses ``W_i = sqrt(L_i)``; the mixed form uses conjugation
    maps with effect probabilities ``tr(L_i rho)``.
    """
    us = [rotation("z", theta1, j), rotation("x", theta2, j)]
    effects = latitude_effects(j)
    if mixed:
        return MixedQIFS([Conjugation(u) for u in us], [EffectProbability(e) for e in effects],
                         us[0].shape[0])
    roots = [np.diag(np.sqrt(np.diag(e).real)).astype(complex) for e in effects]
    return PureQIFS(us, roots)


def kicked_top_qifs(alpha: float, beta: float, delta: float, j) -> HomogeneousQIFS:
    """Kicks of strength ``beta`` or ``beta + delta`` with probability 1/2 each."""
    return HomogeneousQIFS.from_unitaries(
        [0.5, 0.5], [kicked_top(alpha, beta, j), kicked_top(alpha, beta + delta, j)], "kicked-top")


def sphere_grid(resolution: int | tuple) -> tuple:
    """Equiangular cell centers ``(theta, phi)`` on ``[0, pi] x [0, 2 pi)``."""
    mt, mp = (resolution, 2 * resolution) if np.isscalar(resolution) else resolution
    theta = (np.arange(mt) + 0.5) * np.pi / mt
    phi = (np.arange(mp) + 0.5) * 2 * np.pi / mp
    return theta, phi


def husimi_sphere(rho, j, resolution=32, theta=None, phi=None) -> HusimiGrid:
    """``H(theta, phi) = <theta,phi| rho |theta,phi>`` on a grid.

    Explicit ``theta`` / ``phi`` arrays override the default equiangular
    cell-center grid.
    """
    r = as_matrix(rho)
    basis = SpinBasis(j)
    if r.shape[0] != basis.dim:
        raise DimensionError(f"state of size {r.shape[0]} does not match spin {basis.j}")
    if theta is None or phi is None:
        t0, p0 = sphere_grid(resolution)
        theta = t0 if theta is None else theta
        phi = p0 if phi is None else phi
    kets = coherent_table(j, theta, phi)
    vals = np.einsum("abi,ij,abj->ab", kets.conj(), r, kets).real
    vals = np.clip(vals, 0.0, None)
    meta = {"j": basis.j, "N": basis.dim, "shape": list(vals.shape),
            "theta_range": [float(np.min(theta)), float(np.max(theta))],
            "phi_range": [float(np.min(phi)), float(np.max(phi))]}
    return HusimiGrid(vals, meta)
