"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import math
import time

import numpy as np
import pytest

from qifs import classical as cl
from qifs.catalogue import preset
from qifs.channels import (
    PAULI,
    ancilla_channel,
    ancilla_reduced_state,
    barycenter_estimate,
    depolarizing,
    homothety_qifs,
    qifs_trajectory,
    random_external_field,
)
from qifs.config import load_qifs
from qifs.invariant import (
    block_diagonal_invariant_state,
    commutant,
    fixed_states,
    lemma1_validate,
    power_iteration,
)
from qifs.qstate import (
    bures_distance,
    haar_unitary,
    hs_distance,
    random_density_matrix,
    trace_distance,
    von_neumann_entropy,
)
from qifs.spin import SpinBasis, kicked_top_qifs, latitude_probabilities, latitude_qifs, spin_coherent
from qifs.torus import (
    excluded_mass,
    husimi_torus,
    matched_cantor_level,
    position_profile,
    tartan_invariant,
    tartan_operators,
)

from conftest import block_diagonal_family, zero_block_unitary

EPS = np.finfo(float).eps


@pytest.fixture
def report(capsys):
    def emit(k, title, ok, detail=""):
        with capsys.disabled():
            print(f"\ncriterion {k:2d} [{title}]: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return emit


def _dimension_run(name):
    cfg = preset(name)
    p = cfg["params"]
    ifs = cl.cantor_ifs() if p["ifs"]["preset"] == "cantor" else cl.cantor_product_ifs()
    x0 = 0.5 if ifs.space.kind == "interval" else [0.5, 0.5]
    t0 = time.perf_counter()
    res = cl.chaos_game(ifs, x0, p["n"], cfg["seed"], p["resolution"])
    bc = cl.box_counting_dimension(res.measure, p["scales"])
    return bc, time.perf_counter() - t0, p


def test_cantor_dimension(report):
    bc, elapsed, p = _dimension_run("example-1")
    target = math.log(2) / math.log(3)
    ok = (p["n"] == 10**6 and p["scales"] == [3.0**-k for k in range(1, 7)]
          and abs(bc.dimension - target) <= 0.05 and elapsed < 10)
    report(1, "cantor dimension", ok, f"d={bc.dimension:.5f} target={target:.5f} t={elapsed:.2f}s")
    assert ok


def test_product_dimension(report):
    bc, elapsed, p = _dimension_run("example-3")
    target = 2 * math.log(2) / math.log(3)
    ok = p["n"] == 10**6 and abs(bc.dimension - target) <= 0.08 and elapsed < 20
    report(2, "product dimension", ok, f"d={bc.dimension:.5f} target={target:.5f} t={elapsed:.2f}s")
    assert ok


def test_homothety_fixed_point(report):
    r1, r2 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    q = homothety_qifs(r1, r2)
    target = np.eye(2) / 2
    res = power_iteration(q, r1, max_steps=40, tol=1e-12)
    d_fixed = trace_distance(res.state, target)
    traj = qifs_trajectory(q, r1, 100_000, seed=8)
    d_bary = trace_distance(barycenter_estimate(traj), target)
    ok = res.converged and res.steps <= 40 and res.residual <= 1e-12 and d_fixed <= 1e-12 and d_bary <= 0.02
    report(3, "homothety fixed point", ok,
           f"steps={res.steps} residual={res.residual:.2e} |rho-1/2|={d_fixed:.2e} barycenter={d_bary:.4f}")
    assert ok


def test_depolarizing_uniqueness(report):
    rng = np.random.default_rng(4)
    worst_state, worst_factor, mults = 0.0, 0.0, []
    for p in (0.1, 0.5, 0.9):
        ch = depolarizing(p)
        rep = fixed_states(ch)
        mults.append(rep.multiplicity)
        worst_state = max(worst_state, float(np.max(np.abs(rep.state - np.eye(2) / 2))))
        for _ in range(100):
            rho = random_density_matrix(2, rng)
            b_in = np.real([np.trace(s @ rho) for s in PAULI])
            b_out = np.real([np.trace(s @ ch(rho)) for s in PAULI])
            worst_factor = max(worst_factor, float(np.max(np.abs(b_out - (1 - 4 * p / 3) * b_in))))
    ok = mults == [1, 1, 1] and worst_state <= 1e-10 and worst_factor <= 1e-12
    report(4, "depolarizing uniqueness", ok,
           f"multiplicities={mults} state_err={worst_state:.1e} factor_err={worst_factor:.1e}")
    assert ok


def test_uniqueness_equivalence(report):
    rng = np.random.default_rng(5)
    agree, worst_residual, reducible = 0, 0.0, 0
    for k in range(100):
        n = (2, 3, 4)[k % 3]
        count = int(rng.integers(2, 4))
        fam = block_diagonal_family(rng, n, count) if k < 50 else [haar_unitary(n, rng) for _ in range(count)]
        probs = rng.dirichlet(np.ones(count))
        rep = commutant(fam, tol=1e-8)
        ch = random_external_field(probs, fam)
        mult = fixed_states(ch, tol=1e-8).multiplicity
        agree += (rep.dim == 1) == (mult == 1)
        if rep.reducible:
            reducible += 1
            sigma = block_diagonal_invariant_state(rep)
            worst_residual = max(worst_residual, float(np.max(np.abs(ch(sigma) - sigma))))
    ok = agree == 100 and reducible >= 50 and worst_residual <= 1e-8
    report(5, "uniqueness equivalence", ok,
           f"agree={agree}/100 reducible={reducible} direct_sum_residual={worst_residual:.1e}")
    assert ok


def test_zero_block_lemma(report):
    rng = np.random.default_rng(6)
    ok_count, worst_ratio, worst_upper = 0, 0.0, 0.0
    for k in range(100):
        n = int(rng.integers(2, 7))
        u, a = zero_block_unitary(rng, n)
        res = lemma1_validate(u, a, tol=1e-10)
        ok_count += bool(res.precondition_met and res.holds)
        worst_ratio = max(worst_ratio, res.opposite_max / res.bound)
        worst_upper = max(worst_upper, res.upper_max)
    ok = ok_count == 100
    report(6, "zero block lemma", ok,
           f"held={ok_count}/100 max upper={worst_upper:.1e} worst opposite/bound={worst_ratio:.1e}")
    assert ok


HAAR = [{"generator": "haar", "dim": 3, "seed": s} for s in (11, 12, 13)]
SWAP = {"re": np.eye(4)[[0, 2, 1, 3]].tolist(), "im": np.zeros((4, 4)).tolist()}
DAMP = [{"re": [[1, 0], [0, math.sqrt(0.6)]], "im": [[0, 0], [0, 0]]},
        {"re": [[0, math.sqrt(0.4)], [0, 0]], "im": [[0, 0], [0, 0]]}]

# every linear channel the config loader can build; random external fields flagged
CHANNELS = [
    ("identity", {"kind": "identity", "dim": 3}, False),
    ("kraus amplitude damping", {"kind": "kraus", "kraus": DAMP}, False),
    ("random kraus", {"kind": "random", "dim": 3, "n_kraus": 3, "seed": 1}, False),
    ("ancilla swap", {"kind": "ancilla", "unitary": SWAP, "env_dim": 2}, False),
    ("ancilla haar", {"kind": "ancilla", "unitary": {"generator": "haar", "dim": 6, "seed": 2}, "env_dim": 3}, False),
    ("ref haar", {"kind": "ref", "probs": [0.2, 0.3, 0.5], "unitaries": HAAR}, True),
    ("depolarizing", {"kind": "depolarizing", "p": 0.3}, True),
    ("atomic", {"kind": "atomic", "bz": 1.0, "period": 1.0,
                "pulse": {"re": [[0, math.pi / 3], [math.pi / 3, 0]], "im": [[0, 0], [0, 0]]}}, True),
    ("rotations", {"kind": "rotations", "theta1": 1.0, "theta2": 0.7, "j": 2}, True),
    ("kicked top", {"kind": "kicked-top", "alpha": math.pi / 4, "beta": 2.0, "delta": 0.05, "j": 3}, True),
]


def _as_map(obj):
    return obj.channel if hasattr(obj, "channel") else obj


def test_monotonicity_suite(report):
    rng = np.random.default_rng(7)
    slack = 1e-10
    maps = [(name, _as_map(load_qifs(doc)), ref) for name, doc, ref in CHANNELS]
    homothety = load_qifs({"kind": "homothety", "rho1": {"kind": "projector", "dim": 2, "index": 0},
                           "rho2": {"kind": "projector", "dim": 2, "index": 1}})
    maps.append(("homothety average", homothety.averaged_map, False))
    failures, checked = [], 0
    for name, ch, is_ref in maps:
        dim = ch.dim if hasattr(ch, "dim") else 2
        bistochastic = getattr(ch, "bistochastic", False)
        for _ in range(100):
            a, b = random_density_matrix(dim, rng), random_density_matrix(dim, rng)
            fa, fb = ch(a), ch(b)
            checked += 1
            if trace_distance(fa, fb) > trace_distance(a, b) + slack:
                failures.append((name, "trace"))
            if bures_distance(fa, fb) > bures_distance(a, b) + slack:
                failures.append((name, "bures"))
            if bistochastic and hs_distance(fa, fb) > hs_distance(a, b) + slack:
                failures.append((name, "hs"))
            if is_ref and von_neumann_entropy(fa) < von_neumann_entropy(a) - slack:
                failures.append((name, "entropy"))
    ok = not failures
    report(7, "monotonicity", ok, f"channels={len(maps)} pairs={checked} violations={failures[:5]}")
    assert ok


def test_kicked_top_relaxation(report):
    j = 3
    ch = kicked_top_qifs(math.pi / 4, 2.0, 0.05, j).channel
    n_dim = 2 * j + 1
    k = spin_coherent(j, 1.0, 0.5)
    rho = np.outer(k, k.conj())
    dist = np.empty(500)
    for n in range(500):
        rho = ch(rho)
        dist[n] = trace_distance(rho, np.eye(n_dim) / n_dim)
    max_increase = float(np.max(np.diff(dist)))
    steps = np.arange(1, 501)
    slope, icpt = np.polyfit(steps, np.log(dist), 1)
    resid = np.log(dist) - (slope * steps + icpt)
    r2 = 1 - np.sum(resid**2) / np.sum((np.log(dist) - np.log(dist).mean()) ** 2)
    ok = max_increase <= 0 and slope < 0 and r2 > 0.9
    report(8, "kicked top relaxation", ok,
           f"D1={dist[0]:.4f} D500={dist[-1]:.4f} max_increase={max_increase:.1e} slope={slope:.3e} R2={r2:.5f}")
    assert ok


def test_pole_invariance(report):
    j = 3
    top = SpinBasis(j).state(j)
    q = latitude_qifs(1.0, 0.7, j)
    p2 = q.probabilities(top)[1]
    traj = qifs_trajectory(q, top, 10_000, seed=12)
    proj0 = np.outer(top, top.conj())
    dev = max(float(np.max(np.abs(np.outer(s, s.conj()) - proj0))) for s in traj.states)
    ok = p2 == 0.0 and dev <= 1e-12
    report(9, "pole invariance", ok, f"p2={float(p2)!r} max projector deviation={dev:.1e}")
    assert ok


def test_tartan_semiclassics(report):
    t0 = time.perf_counter()
    masses, profile81 = [], None
    for L in (9, 27, 81):
        inv = tartan_invariant(tartan_operators(L), "linear-spectral")
        masses.append(excluded_mass(husimi_torus(inv.state, 27)))
        if L == 27:
            profile81 = position_profile(inv.state)
    elapsed = time.perf_counter() - t0
    level = matched_cantor_level(81)
    r = float(np.corrcoef(profile81, cl.cantor_profile(level, 81))[0, 1])
    decreasing = all(x > y for x, y in zip(masses, masses[1:]))
    ok = decreasing and r > 0.8 and elapsed < 600
    report(10, "tartan semiclassics", ok,
           f"excluded mass N=27,81,243: {[round(m, 4) for m in masses]} pearson(N=81, level {level})={r:.4f} "
           f"t={elapsed:.1f}s")
    assert ok


def test_coherent_probabilities(report):
    worst = 0.0
    for j in (1, 5, 20):
        for theta in np.linspace(0, np.pi, 37):
            for phi in (0.0, 1.3, 4.0):
                p1, p2 = latitude_probabilities(j, spin_coherent(j, theta, phi))
                worst = max(worst, abs(p1 - (1 + np.cos(theta)) / 2), abs(p2 - (1 - np.cos(theta)) / 2))
    ok = worst <= 10 * EPS
    report(11, "coherent probabilities", ok, f"max error={worst:.1e} (10 eps={10 * EPS:.1e})")
    assert ok


def test_ancilla_bistochastic(report):
    rng = np.random.default_rng(12)
    worst_tp, worst_unital, worst_direct = 0.0, 0.0, 0.0
    for k in range(50):
        n, m = (2, 3)[k % 2], (2, 3)[(k // 2) % 2]
        u = haar_unitary(n * m, rng)
        ch = ancilla_channel(u, m)
        worst_tp = max(worst_tp, ch.tp_defect)
        worst_unital = max(worst_unital, ch.unital_defect)
        rho = random_density_matrix(n, rng)
        worst_direct = max(worst_direct, float(np.max(np.abs(ch(rho) - ancilla_reduced_state(u, rho, m)))))
    ok = worst_tp <= 1e-10 and worst_unital <= 1e-10 and worst_direct <= 1e-10
    report(12, "ancilla bistochastic", ok,
           f"sum K^dag K err={worst_tp:.1e} sum K K^dag err={worst_unital:.1e} direct err={worst_direct:.1e}")
    assert ok
