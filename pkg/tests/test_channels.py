import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from qifs.channels import (
    PAULI,
    Conjugation,
    HomogeneousQIFS,
    Homothety,
    MixedQIFS,
    PureQIFS,
    QuantumChannel,
    ancilla_channel,
    ancilla_reduced_state,
    atomic_qifs,
    barycenter_estimate,
    channel_apply,
    depolarizing,
    homothety_qifs,
    identity_channel,
    mixed_map,
    pure_map,
    pure_probability,
    qifs_trajectory,
    random_channel,
    random_external_field,
    unitary_channel,
)
from qifs.errors import DimensionError, InvalidStateError, PreconditionError
from qifs.invariant import superoperator_of
from qifs.qstate import (
    bures_distance,
    haar_unitary,
    hs_distance,
    is_density_matrix,
    random_density_matrix,
    random_ket,
    trace_distance,
    von_neumann_entropy,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
SWAP = np.eye(4)[[0, 2, 1, 3]]


def bloch(rho):
    return np.real([np.trace(s @ rho) for s in PAULI])


# -- pure and mixed maps --------------------------------------------------

def test_pure_map_diagonal():
    out = pure_map(np.diag([1.0, 2.0]), np.array([1.0, 1.0]) / np.sqrt(2))
    assert np.allclose(out, np.array([1.0, 2.0]) / np.sqrt(5), atol=1e-15)


def test_pure_probability():
    w = np.diag([np.sqrt(0.3), 1.0])
    assert pure_probability(w, [1, 0]) == pytest.approx(0.3)
    assert pure_probability(w, [0, 1]) == pytest.approx(1.0)


def test_pure_and_mixed_maps_agree():
    v = np.array([[1.0, 0.5j], [0.2, 2.0]])
    k = random_ket(2, 4)
    lhs = np.outer(pure_map(v, k), pure_map(v, k).conj())
    assert np.allclose(lhs, mixed_map(v, np.outer(k, k.conj())), atol=1e-14)


def test_zero_image_rejected():
    with pytest.raises(PreconditionError):
        pure_map(np.diag([1.0, 0.0]), [0, 1])
    with pytest.raises(PreconditionError):
        mixed_map(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))


def test_pure_qifs_validation():
    with pytest.raises(InvalidStateError):
        PureQIFS([np.diag([1.0, 0.0])], [np.eye(2)])
    with pytest.raises(InvalidStateError):
        PureQIFS([np.eye(2), np.eye(2)], [np.eye(2), np.eye(2)])
    with pytest.raises(DimensionError):
        PureQIFS([np.eye(2)], [np.eye(2), np.eye(2)])


# -- channels -------------------------------------------------------------

def test_depolarizing_full_mixing():
    ch = depolarizing(0.75)
    for seed in range(10):
        assert np.allclose(ch(random_density_matrix(2, seed)), np.eye(2) / 2, atol=1e-14)


@pytest.mark.parametrize("p", [0.0, 0.1, 0.5, 0.9, 1.0])
def test_depolarizing_bloch_factor(p):
    ch = depolarizing(p)
    for seed in range(20):
        rho = random_density_matrix(2, seed)
        assert np.allclose(bloch(ch(rho)), (1 - 4 * p / 3) * bloch(rho), atol=1e-13)


def test_pauli_field_equals_depolarizing():
    p = 0.3
    ref = random_external_field([1 - p, p / 3, p / 3, p / 3], [np.eye(2), *PAULI])
    assert np.allclose(superoperator_of(ref).matrix, superoperator_of(depolarizing(p)).matrix, atol=1e-14)


def test_depolarizing_range():
    with pytest.raises(PreconditionError):
        depolarizing(1.2)


def test_channel_flags():
    assert depolarizing(0.2).bistochastic
    amp = QuantumChannel([np.array([[1, 0], [0, np.sqrt(0.7)]]), np.array([[0, np.sqrt(0.3)], [0, 0]])])
    assert amp.trace_preserving and not amp.unital
    assert amp.is_completely_positive()
    assert not QuantumChannel([0.5 * np.eye(2)]).trace_preserving


def test_channel_apply_requires_trace_preservation():
    with pytest.raises(PreconditionError):
        channel_apply(QuantumChannel([0.5 * np.eye(2)]), np.eye(2) / 2)


def test_channel_json_round_trip():
    ch = random_channel(3, 2, seed=5)
    again = QuantumChannel.from_json(json.loads(json.dumps(ch.to_json())))
    rho = random_density_matrix(3, 1)
    assert np.allclose(ch(rho), again(rho), atol=0)


def test_random_channel_is_cptp():
    ch = random_channel(3, 4, seed=2)
    assert ch.tp_defect < 1e-12
    assert ch.is_completely_positive()


def test_unitary_and_identity_channels():
    u = haar_unitary(3, 1)
    rho = random_density_matrix(3, 2)
    assert np.allclose(unitary_channel(u)(rho), u @ rho @ u.conj().T)
    assert np.allclose(identity_channel(3)(rho), rho)
    with pytest.raises(InvalidStateError):
        unitary_channel(np.diag([1.0, 2.0]))


def test_random_external_field_validation():
    with pytest.raises(PreconditionError):
        random_external_field([0.6, 0.6], [np.eye(2), PAULI[0]])
    with pytest.raises(InvalidStateError):
        random_external_field([1.0], [np.diag([1.0, 2.0])])


# -- ancilla --------------------------------------------------------------

def test_swap_coupling_replaces_state():
    ch = ancilla_channel(SWAP, 2)
    for seed in range(5):
        assert np.allclose(ch(random_density_matrix(2, seed)), np.eye(2) / 2, atol=1e-14)


def test_product_coupling_is_unitary_channel():
    ua, ub = haar_unitary(2, 3), haar_unitary(3, 4)
    ch = ancilla_channel(np.kron(ua, ub), 3)
    rho = random_density_matrix(2, 5)
    assert np.allclose(ch(rho), ua @ rho @ ua.conj().T, atol=1e-13)


def test_ancilla_bistochastic_and_direct():
    for seed in range(10):
        u = haar_unitary(6, seed)
        ch = ancilla_channel(u, 3)
        assert ch.tp_defect < 1e-10 and ch.unital_defect < 1e-10
        rho = random_density_matrix(2, seed + 100)
        assert np.allclose(ch(rho), ancilla_reduced_state(u, rho, 3), atol=1e-12)


def test_ancilla_dimension_check():
    with pytest.raises(DimensionError):
        ancilla_channel(np.eye(6), 4)


# -- atomic model ---------------------------------------------------------

def test_atomic_without_pulse_is_free_precession():
    q = atomic_qifs(1.0, 1.0)
    u0 = expm(-0.5j * PAULI[2])
    rho = random_density_matrix(2, 1)
    assert np.allclose(q.channel(rho), u0 @ rho @ u0.conj().T, atol=1e-14)


def test_atomic_constant_profile_matches_integrated_pulse():
    a = (np.pi / 3) * PAULI[0]
    direct = atomic_qifs(1.0, 1.0, pulse=a)
    sliced = atomic_qifs(1.0, 1.0, profile=lambda t: a, slices=32)
    assert np.allclose(direct.unitaries[1], sliced.unitaries[1], atol=1e-12)
    table = atomic_qifs(1.0, 1.0, profile=[a] * 8, slices=8)
    assert np.allclose(direct.unitaries[1], table.unitaries[1], atol=1e-12)


def test_atomic_rejects_non_hermitian_pulse():
    with pytest.raises(InvalidStateError):
        atomic_qifs(1.0, 1.0, pulse=np.array([[0, 1], [0, 0]]))


# -- homogeneous and mixed QIFS -------------------------------------------

def test_homogeneous_mixed_form_averages_to_channel():
    q = HomogeneousQIFS.from_unitaries([0.3, 0.7], [haar_unitary(3, 1), haar_unitary(3, 2)])
    mixed = q.as_mixed()
    rho = random_density_matrix(3, 3)
    assert np.allclose(mixed.averaged_map(rho), q.channel(rho), atol=1e-14)
    assert mixed.check() < 1e-12


def test_homothety_maps_onto_segment():
    r1, r2 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    rho = random_density_matrix(2, 3)
    h = Homothety(r1)
    assert np.allclose(h(rho), (rho + 2 * r1) / 3)
    # distance to the target shrinks by the ratio
    assert trace_distance(h(rho), r1) == pytest.approx(trace_distance(rho, r1) / 3)
    q = homothety_qifs(r1, r2)
    assert np.allclose(q.averaged_map(np.eye(2) / 2), np.eye(2) / 2)


def test_homothety_trajectory_barycenter():
    q = homothety_qifs(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    traj = qifs_trajectory(q, np.diag([1.0, 0.0]), 20_000, seed=8)
    assert trace_distance(barycenter_estimate(traj, 100), np.eye(2) / 2) < 0.03


def test_pure_trajectory_barycenter():
    q = HomogeneousQIFS.from_unitaries([0.5, 0.5], [haar_unitary(3, 11), haar_unitary(3, 12)])
    traj = qifs_trajectory(q, np.array([1, 0, 0]), 20_000, seed=6)
    assert traj.pure
    assert np.allclose(np.linalg.norm(traj.states, axis=1), 1.0)
    assert trace_distance(barycenter_estimate(traj, 100), np.eye(3) / 3) < 0.05


def test_trajectory_reproducible_and_map_choice():
    q = HomogeneousQIFS.from_unitaries([0.25, 0.75], [haar_unitary(2, 1), haar_unitary(2, 2)])
    a = qifs_trajectory(q, np.eye(2) / 2 + 0.1 * PAULI[2], 4000, seed=3)
    b = qifs_trajectory(q, np.eye(2) / 2 + 0.1 * PAULI[2], 4000, seed=3)
    assert np.array_equal(a.indices, b.indices)
    assert np.mean(a.indices == 1) == pytest.approx(0.75, abs=0.03)


def test_zero_probability_map_never_chosen():
    q = MixedQIFS([Conjugation(PAULI[0]), Conjugation(np.eye(2))], [0.0, 1.0], 2)
    traj = qifs_trajectory(q, np.diag([1.0, 0.0]), 500, seed=0)
    assert np.all(traj.indices == 1)


def test_trajectory_rejects_bad_probabilities():
    q = MixedQIFS([Conjugation(np.eye(2))], [0.5], 2)
    with pytest.raises(PreconditionError):
        qifs_trajectory(q, np.eye(2) / 2, 3, seed=0)


# -- contraction properties -----------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.integers(1, 4), seeds)
def test_channels_contract_distances(dim, n_kraus, seed):
    rng = np.random.default_rng(seed)
    ch = random_channel(dim, n_kraus, rng)
    a, b = random_density_matrix(dim, rng), random_density_matrix(dim, rng)
    assert is_density_matrix(ch(a))
    assert trace_distance(ch(a), ch(b)) <= trace_distance(a, b) + 1e-10
    assert bures_distance(ch(a), ch(b)) <= bures_distance(a, b) + 1e-7


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), seeds)
def test_random_fields_raise_entropy(dim, seed):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(3))
    ch = random_external_field(p, [haar_unitary(dim, rng) for _ in range(3)])
    a, b = random_density_matrix(dim, rng, rank=1), random_density_matrix(dim, rng)
    assert von_neumann_entropy(ch(a)) >= von_neumann_entropy(a) - 1e-10
    assert hs_distance(ch(a), ch(b)) <= hs_distance(a, b) + 1e-10
