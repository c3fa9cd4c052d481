import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qifs.errors import DimensionError, InvalidStateError
from qifs.qstate import (
    DensityMatrix,
    PureState,
    bures_distance,
    fidelity_root,
    fubini_study,
    haar_unitary,
    hs_distance,
    is_density_matrix,
    is_unitary,
    matrix_from_json,
    matrix_to_json,
    partial_trace,
    random_density_matrix,
    random_ket,
    trace_distance,
    validate_density,
    von_neumann_entropy,
)

from conftest import random_pairs

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=2, max_value=5)


# -- frozen values from closed forms --------------------------------------

def test_orthogonal_projectors():
    p0 = np.diag([1.0, 0.0])
    p1 = np.diag([0.0, 1.0])
    assert trace_distance(p0, p1) == pytest.approx(2.0, abs=1e-14)
    assert hs_distance(p0, p1) == pytest.approx(np.sqrt(2.0), abs=1e-14)
    assert bures_distance(p0, p1) == pytest.approx(np.sqrt(2.0), abs=1e-12)
    assert fubini_study([1, 0], [0, 1]) == pytest.approx(np.pi / 2, abs=1e-14)


def test_fubini_study_angle():
    # |<0|cos a, sin a>| = cos a
    a = 0.37
    assert fubini_study([1, 0], [np.cos(a), np.sin(a)]) == pytest.approx(a, abs=1e-12)


def test_trace_distance_bloch_vectors():
    # for qubits the trace norm equals the Euclidean Bloch distance
    def bloch(r):
        return 0.5 * np.array([[1 + r[2], r[0] - 1j * r[1]], [r[0] + 1j * r[1], 1 - r[2]]])
    r1, r2 = np.array([0.3, -0.2, 0.5]), np.array([-0.1, 0.4, 0.1])
    assert trace_distance(bloch(r1), bloch(r2)) == pytest.approx(np.linalg.norm(r1 - r2), abs=1e-13)


def test_bures_commuting_states():
    # commuting states: F^(1/2) = sum sqrt(p_i q_i)
    p, q = np.array([0.2, 0.3, 0.5]), np.array([0.6, 0.1, 0.3])
    f = np.sum(np.sqrt(p * q))
    assert fidelity_root(np.diag(p), np.diag(q)) == pytest.approx(f, abs=1e-13)
    assert bures_distance(np.diag(p), np.diag(q)) == pytest.approx(np.sqrt(2 * (1 - f)), abs=1e-12)


def test_entropy_values():
    assert von_neumann_entropy(np.eye(4) / 4) == pytest.approx(np.log(4), abs=1e-13)
    assert von_neumann_entropy(np.diag([1.0, 0, 0])) == 0.0
    p = np.array([0.1, 0.2, 0.7])
    assert von_neumann_entropy(np.diag(p)) == pytest.approx(-np.sum(p * np.log(p)), abs=1e-13)


def test_partial_trace_product_state():
    a = random_density_matrix(2, 1)
    b = random_density_matrix(3, 2)
    ab = np.kron(a, b)
    assert np.allclose(partial_trace(ab, (2, 3), "B"), a, atol=1e-13)
    assert np.allclose(partial_trace(ab, (2, 3), "A"), b, atol=1e-13)


def test_partial_trace_bell_state():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(partial_trace(np.outer(bell, bell), (2, 2)), np.eye(2) / 2)


def test_partial_trace_rejects_bad_dims():
    with pytest.raises(DimensionError):
        partial_trace(np.eye(6) / 6, (2, 2))
    with pytest.raises(ValueError):
        partial_trace(np.eye(4) / 4, (2, 2), "C")


# -- contracts ------------------------------------------------------------

def test_pure_state_phase_equality():
    k = random_ket(3, 5)
    assert PureState(k) == PureState(np.exp(0.7j) * k)
    assert PureState(k) != PureState(random_ket(3, 6))
    with pytest.raises(InvalidStateError):
        PureState(np.zeros(3))


def test_density_validation():
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.array([[1.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.diag([0.6, 0.6]))
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.diag([1.2, -0.2]))
    # defects at the tolerance scale are cleaned rather than rejected
    rho = validate_density(np.diag([1.0 + 1e-11, -1e-11]))
    assert np.linalg.eigvalsh(rho).min() >= 0
    assert is_density_matrix(np.eye(3) / 3)
    assert not is_density_matrix(np.eye(3))


def test_distance_dimension_mismatch():
    with pytest.raises(DimensionError):
        trace_distance(np.eye(2) / 2, np.eye(3) / 3)
    with pytest.raises(DimensionError):
        fubini_study([1, 0], [1, 0, 0])


def test_json_round_trip():
    rho = random_density_matrix(3, 7)
    doc = json.loads(json.dumps(DensityMatrix(rho).to_json()))
    assert np.array_equal(DensityMatrix.from_json(doc).matrix, DensityMatrix(rho).matrix)
    m = haar_unitary(4, 3)
    assert np.array_equal(matrix_from_json(json.loads(json.dumps(matrix_to_json(m)))), m)


def test_haar_unitary_is_unitary_and_seeded():
    u = haar_unitary(5, 11)
    assert is_unitary(u)
    assert np.array_equal(u, haar_unitary(5, 11))


# -- property tests -------------------------------------------------------

def test_distance_ordering_on_random_pairs():
    # D_HS <= D_tr and the Fuchs-van de Graaf type bounds on Bures
    for dim in (2, 3, 4):
        for r1, r2 in random_pairs(dim, 334, seed=dim):
            dtr = trace_distance(r1, r2)
            dhs = hs_distance(r1, r2)
            db = bures_distance(r1, r2)
            f = fidelity_root(r1, r2)
            assert dhs <= dtr + 1e-12
            assert 1 - f <= dtr / 2 + 1e-10
            assert dtr / 2 <= np.sqrt(max(1 - f * f, 0.0)) + 1e-10
            assert 0 <= db <= np.sqrt(2) + 1e-12


@settings(max_examples=60, deadline=None)
@given(dims, seeds)
def test_triangle_inequality(dim, seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_density_matrix(dim, rng) for _ in range(3))
    for d in (trace_distance, hs_distance, bures_distance):
        assert d(a, c) <= d(a, b) + d(b, c) + 1e-10
        assert d(a, b) == pytest.approx(d(b, a), abs=1e-10)
        assert d(a, a) <= 1e-6


@settings(max_examples=60, deadline=None)
@given(dims, seeds)
def test_unitary_invariance(dim, seed):
    rng = np.random.default_rng(seed)
    a, b = random_density_matrix(dim, rng), random_density_matrix(dim, rng)
    u = haar_unitary(dim, rng)
    ua, ub = u @ a @ u.conj().T, u @ b @ u.conj().T
    assert trace_distance(ua, ub) == pytest.approx(trace_distance(a, b), abs=1e-10)
    assert bures_distance(ua, ub) == pytest.approx(bures_distance(a, b), abs=1e-7)
    assert von_neumann_entropy(ua) == pytest.approx(von_neumann_entropy(a), abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(dims, seeds)
def test_pure_state_distances_agree(dim, seed):
    # on pure states Bures and Fubini-Study are both functions of |<a|b>|
    rng = np.random.default_rng(seed)
    a, b = random_ket(dim, rng), random_ket(dim, rng)
    ov = abs(np.vdot(a, b))
    pa, pb = np.outer(a, a.conj()), np.outer(b, b.conj())
    assert fubini_study(a, b) == pytest.approx(np.arccos(min(ov, 1.0)), abs=1e-10)
    assert bures_distance(pa, pb) == pytest.approx(np.sqrt(2 * (1 - ov)), abs=1e-6)
    assert trace_distance(pa, pb) == pytest.approx(2 * np.sqrt(1 - ov ** 2), abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=2, max_value=3), st.integers(min_value=2, max_value=3), seeds)
def test_partial_trace_preserves_state(n, m, seed):
    sigma = random_density_matrix(n * m, seed)
    for side in ("A", "B"):
        red = partial_trace(sigma, (n, m), side)
        assert is_density_matrix(red)
    # subadditivity of entropy
    s = von_neumann_entropy(sigma)
    sa = von_neumann_entropy(partial_trace(sigma, (n, m), "B"))
    sb = von_neumann_entropy(partial_trace(sigma, (n, m), "A"))
    assert s <= sa + sb + 1e-10
