"""Built-in experiment presets, one per worked example, every parameter pinned."""
from __future__ import annotations

import copy
import math

from .config import ConfigError

_HAAR3 = [{"generator": "haar", "dim": 3, "seed": 11}, {"generator": "haar", "dim": 3, "seed": 12}]

_PRESETS = [
    ("cantor", "Middle-thirds Cantor IFS; box-counting dimension ln2/ln3 ~ 0.6309", {
        "kind": "dimension", "seed": 1,
        "params": {"ifs": {"preset": "cantor"}, "n": 1_000_000, "resolution": 729,
                   "scales": [3.0 ** -k for k in range(1, 7)]}}),
    ("weighted-cantor", "Cantor maps with p1(x)=x; not hyperbolic since p1(0)=0", {
        "kind": "chaos-game", "seed": 2,
        "params": {"ifs": {"preset": "weighted-cantor"}, "n": 1_000_000, "resolution": 243}}),
    ("cantor-product", "Four one-axis contractions of the square; dimension 2 ln2/ln3 ~ 1.2619", {
        "kind": "dimension", "seed": 3,
        "params": {"ifs": {"preset": "cantor-product"}, "n": 1_000_000, "resolution": 729,
                   "scales": [3.0 ** -k for k in range(1, 7)]}}),
    ("sphere-rotations", "Two sphere rotations; the uniform measure is invariant", {
        "kind": "push-measure", "seed": 4,
        "params": {"ifs": {"preset": "sphere-rotations", "chi1": 1.0, "chi2": 0.7, "tilt": 0.5},
                   "resolution": 32, "steps": 10, "initial": "uniform"}}),
    ("tent-bernoulli", "Tent and Bernoulli maps; Lebesgue measure invariant, maps expanding", {
        "kind": "chaos-game", "seed": 5,
        "params": {"ifs": {"preset": "tent-bernoulli"}, "n": 1_000_000, "resolution": 100}}),
    ("unitary-pure", "Two Haar unitaries on pure states (N=3); isometric maps", {
        "kind": "trajectory", "seed": 6,
        "params": {"qifs": {"kind": "ref", "probs": [0.5, 0.5], "unitaries": _HAAR3},
                   "initial": {"kind": "basis", "dim": 3, "index": 0}, "n": 10_000}}),
    ("unitary-mixed", "Two Haar unitaries on density matrices; barycenter -> 1/N", {
        "kind": "barycenter", "seed": 7,
        "params": {"qifs": {"kind": "ref", "probs": [0.5, 0.5], "unitaries": _HAAR3},
                   "initial": {"kind": "basis", "dim": 3, "index": 0}, "n": 100_000, "burn_in": 100,
                   "reference": {"kind": "maximally-mixed", "dim": 3}}}),
    ("atomic", "Two-level atom, B_z T = 1, pulse A = (pi/3) sigma_1, p = 1/2", {
        "kind": "uniqueness", "seed": 8,
        "params": {"qifs": {"kind": "atomic", "bz": 1.0, "period": 1.0, "p": 0.5,
                            "pulse": {"re": [[0, math.pi / 3], [math.pi / 3, 0]], "im": [[0, 0], [0, 0]]}}}}),
    ("homothety", "Homotheties (rho + 2 rho_i)/3 toward orthogonal projectors; fixed point 1/2", {
        "kind": "barycenter", "seed": 9,
        "params": {"qifs": {"kind": "homothety", "rho1": {"kind": "projector", "dim": 2, "index": 0},
                            "rho2": {"kind": "projector", "dim": 2, "index": 1}},
                   "initial": {"kind": "projector", "dim": 2, "index": 0}, "n": 100_000, "burn_in": 100}}),
    ("depolarizing", "Pauli random external field = depolarizing channel, p=0.3; unique 1/2", {
        "kind": "invariant-state", "seed": 10,
        "params": {"qifs": {"kind": "depolarizing", "p": 0.3},
                   "initial": {"kind": "random", "dim": 2, "seed": 10}}}),
    ("rotations", "exp(i theta1 Jz), exp(i theta2 Jx), j=2; not common block-diagonal", {
        "kind": "uniqueness", "seed": 11,
        "params": {"qifs": {"kind": "rotations", "theta1": 1.0, "theta2": 0.7, "j": 2}}}),
    ("latitude", "Rotations with p = 1/2 +- <Jz>/2j, j=3; |j,j> invariant", {
        "kind": "trajectory", "seed": 12,
        "params": {"qifs": {"kind": "latitude", "theta1": 1.0, "theta2": 0.7, "j": 3},
                   "initial": {"kind": "spin-top", "j": 3}, "n": 10_000}}),
    ("kicked-top", "Randomly kicked top, alpha=pi/4, beta=2, delta=0.05, j=3", {
        "kind": "invariant-state", "seed": 13,
        "params": {"qifs": {"kind": "kicked-top", "alpha": math.pi / 4, "beta": 2.0, "delta": 0.05, "j": 3},
                   "initial": {"kind": "spin-coherent", "j": 3, "theta": 1.0, "phi": 0.5},
                   "evolve_steps": 500, "max_steps": 2000}}),
    ("tartan", "Quantum tartan at N=81, linear-spectral mode, Husimi at M=54", {
        "kind": "tartan", "seed": 14,
        "params": {"L": 27, "mode": "linear-spectral", "resolution": 54}}),
]

PRESETS = {f"example-{i}": {"name": f"example-{i}-{slug}", "summary": summary, "config": cfg}
           for i, (slug, summary, cfg) in enumerate(_PRESETS, start=1)}


def preset(name: str) -> dict:
    """Config of a preset, looked up by ``example-K`` or ``example-K-slug``."""
    for key, entry in PRESETS.items():
        if name in (key, entry["name"]):
            return copy.deepcopy(entry["config"])
    raise ConfigError(f"unknown preset {name!r}; run 'qifs catalogue' for the list")


def listing() -> list:
    return [{"key": k, "name": e["name"], "kind": e["config"]["kind"], "summary": e["summary"],
             "params": e["config"]["params"], "seed": e["config"]["seed"]} for k, e in PRESETS.items()]
