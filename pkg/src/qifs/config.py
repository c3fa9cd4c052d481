"""JSON definitions of matrices, states, classical IFSs and QIFSs.

Every loader rejects unknown keys so a typo never silently falls back to a
default.
"""
from __future__ import annotations

import numpy as np

from . import classical as cl
from .channels import (
    PAULI,
    HomogeneousQIFS,
    QuantumChannel,
    ancilla_channel,
    atomic_qifs,
    homothety_qifs,
    identity_channel,
    random_channel,
)
from .errors import QIFSError
from .qstate import haar_unitary, matrix_from_json, normalize, random_density_matrix, random_ket
from .spin import SpinBasis, kicked_top, kicked_top_qifs, latitude_qifs, rotation, rotation_qifs, spin_coherent
from .torus import coherent_torus, reference_state


class ConfigError(QIFSError, ValueError):
    """Invalid experiment or definition document."""


REQUIRED = object()


def take(doc: dict, schema: dict, where: str) -> dict:
    """Resolve ``doc`` against ``schema`` (name -> default or REQUIRED)."""
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected an object, got {type(doc).__name__}")
    unknown = sorted(set(doc) - set(schema))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {unknown}; allowed {sorted(schema)}")
    out = {}
    for key, default in schema.items():
        if key in doc:
            out[key] = doc[key]
        elif default is REQUIRED:
            raise ConfigError(f"{where}: missing required key {key!r}")
        else:
            out[key] = default
    return out


def _kind(doc, where: str) -> str:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ConfigError(f"{where}: expected an object with a 'kind'")
    return doc["kind"]


# ---------------------------------------------------------------------------
# Matrices
# ---------------------------------------------------------------------------

def load_matrix(doc, where: str = "matrix") -> np.ndarray:
    """``{"re", "im"[, "dim"]}`` or ``{"generator": ...}``."""
    if isinstance(doc, dict) and "generator" in doc:
        gen = doc["generator"]
        if gen == "haar":
            a = take(doc, {"generator": REQUIRED, "dim": REQUIRED, "seed": REQUIRED}, where)
            return haar_unitary(int(a["dim"]), int(a["seed"]))
        if gen == "pauli":
            a = take(doc, {"generator": REQUIRED, "index": REQUIRED}, where)
            idx = int(a["index"])
            return np.eye(2, dtype=complex) if idx == 0 else PAULI[idx - 1].copy()
        if gen == "identity":
            a = take(doc, {"generator": REQUIRED, "dim": REQUIRED}, where)
            return np.eye(int(a["dim"]), dtype=complex)
        if gen == "diag-phase":
            a = take(doc, {"generator": REQUIRED, "phases": REQUIRED}, where)
            return np.diag(np.exp(1j * np.asarray(a["phases"], dtype=float)))
        if gen == "rotation":
            a = take(doc, {"generator": REQUIRED, "axis": REQUIRED, "angle": REQUIRED, "j": REQUIRED}, where)
            return rotation(a["axis"], float(a["angle"]), a["j"])
        if gen == "kicked-top":
            a = take(doc, {"generator": REQUIRED, "alpha": REQUIRED, "beta": REQUIRED, "j": REQUIRED}, where)
            return kicked_top(float(a["alpha"]), float(a["beta"]), a["j"])
        raise ConfigError(f"{where}: unknown matrix generator {gen!r}")
    try:
        return matrix_from_json(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------

def load_state(doc, where: str = "state") -> np.ndarray:
    """Ket (1-D) or density matrix (2-D) from a state definition."""
    kind = _kind(doc, where)
    if kind == "maximally-mixed":
        a = take(doc, {"kind": REQUIRED, "dim": REQUIRED}, where)
        return np.eye(int(a["dim"]), dtype=complex) / int(a["dim"])
    if kind == "basis":
        a = take(doc, {"kind": REQUIRED, "dim": REQUIRED, "index": REQUIRED}, where)
        ket = np.zeros(int(a["dim"]), dtype=complex)
        ket[int(a["index"])] = 1.0
        return ket
    if kind == "projector":
        a = take(doc, {"kind": REQUIRED, "dim": REQUIRED, "index": REQUIRED}, where)
        m = np.zeros((int(a["dim"]),) * 2, dtype=complex)
        m[int(a["index"]), int(a["index"])] = 1.0
        return m
    if kind == "spin-coherent":
        a = take(doc, {"kind": REQUIRED, "j": REQUIRED, "theta": REQUIRED, "phi": 0.0}, where)
        return spin_coherent(a["j"], float(a["theta"]), float(a["phi"]))
    if kind == "spin-top":
        a = take(doc, {"kind": REQUIRED, "j": REQUIRED}, where)
        basis = SpinBasis(a["j"])
        return basis.state(basis.j)
    if kind == "torus-coherent":
        a = take(doc, {"kind": REQUIRED, "N": REQUIRED, "q": 0.5, "p": 0.5}, where)
        return coherent_torus(float(a["q"]), float(a["p"]), int(a["N"]))
    if kind == "torus-reference":
        a = take(doc, {"kind": REQUIRED, "N": REQUIRED}, where)
        return reference_state(int(a["N"]))
    if kind == "random":
        a = take(doc, {"kind": REQUIRED, "dim": REQUIRED, "seed": REQUIRED, "pure": False}, where)
        if a["pure"]:
            return random_ket(int(a["dim"]), int(a["seed"]))
        return random_density_matrix(int(a["dim"]), int(a["seed"]))
    if kind == "ket":
        a = take(doc, {"kind": REQUIRED, "re": REQUIRED, "im": None}, where)
        im = np.zeros(len(a["re"])) if a["im"] is None else np.asarray(a["im"], dtype=float)
        return normalize(np.asarray(a["re"], dtype=float) + 1j * im)
    if kind == "matrix":
        a = take(doc, {"kind": REQUIRED, "dim": None, "re": REQUIRED, "im": None}, where)
        return load_matrix({k: v for k, v in a.items() if k != "kind" and v is not None}, where)
    raise ConfigError(f"{where}: unknown state kind {kind!r}")


# ---------------------------------------------------------------------------
# Classical IFSs
# ---------------------------------------------------------------------------

_CLASSICAL_PRESETS = {
    "cantor": (cl.cantor_ifs, {}),
    "weighted-cantor": (cl.weighted_cantor_ifs, {}),
    "cantor-product": (cl.cantor_product_ifs, {}),
    "tent-bernoulli": (cl.tent_bernoulli_ifs, {}),
    "sphere-rotations": (cl.sphere_rotation_ifs, {"chi1": 1.0, "chi2": 0.7, "tilt": 0.5}),
    "zx-rotations": (cl.zx_rotation_ifs, {"theta1": 1.0, "theta2": 0.7, "latitude_weights": False}),
    "kicked-top": (cl.kicked_top_ifs, {"alpha": np.pi / 4, "beta": 2.0, "delta": 0.05}),
}


def load_classical_ifs(doc, where: str = "ifs") -> cl.ClassicalIFS:
    """``{"preset": name, ...parameters}`` or an explicit ``{"space", "maps", "probs"}``."""
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected an object")
    if "preset" in doc:
        name = doc["preset"]
        if name not in _CLASSICAL_PRESETS:
            raise ConfigError(f"{where}: unknown classical preset {name!r}; known {sorted(_CLASSICAL_PRESETS)}")
        fn, defaults = _CLASSICAL_PRESETS[name]
        a = take(doc, {"preset": REQUIRED, **defaults}, where)
        return fn(**{k: v for k, v in a.items() if k != "preset"})
    a = take(doc, {"space": REQUIRED, "maps": REQUIRED, "probs": REQUIRED, "name": ""}, where)
    try:
        return cl.ClassicalIFS.from_dict(a)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


# ---------------------------------------------------------------------------
# QIFSs and channels
# ---------------------------------------------------------------------------

def _matrices(items, where):
    if not isinstance(items, list) or not items:
        raise ConfigError(f"{where}: expected a nonempty list of matrices")
    return [load_matrix(m, f"{where}[{i}]") for i, m in enumerate(items)]


def load_qifs(doc, where: str = "qifs"):
    """Channel or QIFS definition.

    Returns a :class:`QuantumChannel`, a :class:`HomogeneousQIFS`, a
    :class:`MixedQIFS` or a :class:`PureQIFS`.
    """
    kind = _kind(doc, where)
    if kind == "kraus":
        a = take(doc, {"kind": REQUIRED, "dim": None, "kraus": REQUIRED}, where)
        return QuantumChannel(_matrices(a["kraus"], f"{where}.kraus"), "kraus")
    if kind == "ref":
        a = take(doc, {"kind": REQUIRED, "dim": None, "probs": REQUIRED, "unitaries": REQUIRED}, where)
        return HomogeneousQIFS.from_unitaries(a["probs"], _matrices(a["unitaries"], f"{where}.unitaries"), "ref")
    if kind == "depolarizing":
        a = take(doc, {"kind": REQUIRED, "dim": 2, "p": REQUIRED}, where)
        p = float(a["p"])
        return HomogeneousQIFS.from_unitaries([1 - p, p / 3, p / 3, p / 3],
                                              [np.eye(2), *PAULI], f"depolarizing(p={p})")
    if kind == "homothety":
        a = take(doc, {"kind": REQUIRED, "dim": None, "rho1": REQUIRED, "rho2": REQUIRED,
                       "ratio": 1 / 3}, where)
        r1, r2 = load_state(a["rho1"], f"{where}.rho1"), load_state(a["rho2"], f"{where}.rho2")
        r1 = np.outer(r1, r1.conj()) if r1.ndim == 1 else r1
        r2 = np.outer(r2, r2.conj()) if r2.ndim == 1 else r2
        return homothety_qifs(r1, r2, float(a["ratio"]))
    if kind == "ancilla":
        a = take(doc, {"kind": REQUIRED, "dim": None, "unitary": REQUIRED, "env_dim": REQUIRED}, where)
        return ancilla_channel(load_matrix(a["unitary"], f"{where}.unitary"), int(a["env_dim"]))
    if kind == "atomic":
        a = take(doc, {"kind": REQUIRED, "dim": 2, "bz": REQUIRED, "period": REQUIRED,
                       "pulse": None, "p": 0.5, "pulse_table": None}, where)
        pulse = None if a["pulse"] is None else load_matrix(a["pulse"], f"{where}.pulse")
        table = None if a["pulse_table"] is None else _matrices(a["pulse_table"], f"{where}.pulse_table")
        kw = {} if table is None else {"profile": table, "slices": len(table)}
        return atomic_qifs(float(a["bz"]), float(a["period"]), pulse, float(a["p"]), **kw)
    if kind == "rotations":
        a = take(doc, {"kind": REQUIRED, "theta1": REQUIRED, "theta2": REQUIRED, "j": REQUIRED}, where)
        return rotation_qifs(float(a["theta1"]), float(a["theta2"]), a["j"])
    if kind == "latitude":
        a = take(doc, {"kind": REQUIRED, "theta1": REQUIRED, "theta2": REQUIRED, "j": REQUIRED,
                       "mixed": False}, where)
        return latitude_qifs(float(a["theta1"]), float(a["theta2"]), a["j"], bool(a["mixed"]))
    if kind == "kicked-top":
        a = take(doc, {"kind": REQUIRED, "alpha": REQUIRED, "beta": REQUIRED, "delta": REQUIRED,
                       "j": REQUIRED}, where)
        return kicked_top_qifs(float(a["alpha"]), float(a["beta"]), float(a["delta"]), a["j"])
    if kind == "identity":
        a = take(doc, {"kind": REQUIRED, "dim": REQUIRED}, where)
        return identity_channel(int(a["dim"]))
    if kind == "random":
        a = take(doc, {"kind": REQUIRED, "dim": REQUIRED, "n_kraus": 2, "seed": REQUIRED}, where)
        return random_channel(int(a["dim"]), int(a["n_kraus"]), int(a["seed"]))
    raise ConfigError(f"{where}: unknown QIFS kind {kind!r}")


def as_channel(obj) -> QuantumChannel | None:
    """Linear channel induced by a definition, when there is one."""
    if isinstance(obj, QuantumChannel):
        return obj
    if isinstance(obj, HomogeneousQIFS):
        return obj.channel
    return None


def unitary_family(obj):
    """``(probs, unitaries)`` for random external fields, else ``None``."""
    if isinstance(obj, HomogeneousQIFS) and obj.unitaries is not None:
        return obj.weights, obj.unitaries
    return None

