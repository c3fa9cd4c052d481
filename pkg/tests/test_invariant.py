import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qifs.channels import (
    PAULI,
    QuantumChannel,
    depolarizing,
    homothety_qifs,
    identity_channel,
    random_channel,
    random_external_field,
    unitary_channel,
)
from qifs.errors import InvalidStateError, PreconditionError
from qifs.invariant import (
    block_diagonal_invariant_state,
    commutant,
    fixed_states,
    lemma1_validate,
    power_iteration,
    superoperator_of,
    uniqueness_verdict,
    unvec,
    vec,
)
from qifs.qstate import haar_unitary, is_density_matrix, random_density_matrix, trace_distance

from conftest import block_diagonal_family, zero_block_unitary

seeds = st.integers(min_value=0, max_value=2**32 - 1)


# -- vectorization --------------------------------------------------------

def test_vec_stacks_columns():
    m = np.array([[1, 2], [3, 4]])
    assert vec(m).tolist() == [1, 3, 2, 4]
    assert np.array_equal(unvec(vec(m)), m)


def test_superoperator_matches_channel():
    ch = random_channel(3, 3, seed=4)
    rho = random_density_matrix(3, 5)
    # column stacking built by hand
    stacked = np.concatenate([rho[:, k] for k in range(3)])
    out = superoperator_of(ch).matrix @ stacked
    assert np.allclose(out.reshape(3, 3).T, ch(rho), atol=1e-14)


# -- spectra and fixed states ---------------------------------------------

@pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.9])
def test_depolarizing_spectrum(p):
    w = superoperator_of(depolarizing(p)).eigenvalues()
    assert np.allclose(np.sort(w.real)[::-1], [1] + [1 - 4 * p / 3] * 3, atol=1e-12)
    rep = fixed_states(depolarizing(p))
    assert rep.multiplicity == 1 and rep.unique
    assert np.allclose(rep.state, np.eye(2) / 2, atol=1e-12)


def test_identity_multiplicity():
    rep = fixed_states(identity_channel(3))
    assert rep.multiplicity == 9
    assert len(rep.basis) == 9
    assert np.allclose(rep.state, np.eye(3) / 3)


def test_commuting_diagonal_field_has_many_fixed_states():
    ref = random_external_field([0.5, 0.5], [np.diag(np.exp(1j * np.array([0.1, 0.7, 2.0]))),
                                             np.diag(np.exp(1j * np.array([1.3, 0.2, 0.4])))])
    rep = fixed_states(ref)
    assert rep.multiplicity >= 2
    assert rep.multiplicity == 3
    for b in rep.basis:
        assert np.allclose(ref(b), b, atol=1e-10)


def test_amplitude_damping_fixed_state():
    g = 0.4
    ch = QuantumChannel([np.array([[1, 0], [0, np.sqrt(1 - g)]]), np.array([[0, np.sqrt(g)], [0, 0]])])
    rep = fixed_states(ch)
    assert rep.multiplicity == 1
    assert np.allclose(rep.state, np.diag([1.0, 0.0]), atol=1e-12)


def test_fixed_states_needs_trace_preservation():
    with pytest.raises(PreconditionError):
        fixed_states(QuantumChannel([0.5 * np.eye(2)]))


def test_large_dimension_falls_back_to_power_iteration():
    ch = unitary_channel(np.diag(np.exp(1j * np.linspace(0, 1, 101))))
    rep = fixed_states(ch)
    assert rep.method == "power-iteration"
    assert rep.multiplicity is None and rep.unique is None
    assert np.allclose(rep.state, np.eye(101) / 101)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.integers(1, 3), seeds)
def test_spectral_radius_at_most_one(dim, n_kraus, seed):
    ch = random_channel(dim, n_kraus, seed)
    w = superoperator_of(ch).eigenvalues()
    assert np.abs(w).max() <= 1 + 1e-10
    assert np.abs(w - 1).min() < 1e-9
    rep = fixed_states(ch)
    assert is_density_matrix(rep.state)
    assert rep.residual < 1e-9


def test_fixed_state_report_json():
    doc = json.loads(json.dumps(fixed_states(depolarizing(0.2)).to_json()))
    assert doc["multiplicity"] == 1


# -- power iteration ------------------------------------------------------

def test_power_iteration_homothety():
    q = homothety_qifs(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    res = power_iteration(q, np.diag([1.0, 0.0]))
    assert res.converged and res.steps <= 40
    assert np.allclose(res.state, np.eye(2) / 2, atol=1e-12)


def test_power_iteration_depolarizing():
    res = power_iteration(depolarizing(0.5), random_density_matrix(2, 3))
    assert res.converged and res.steps <= 80
    assert trace_distance(res.state, np.eye(2) / 2) < 1e-11


def test_power_iteration_unitary_is_immediate():
    res = power_iteration(unitary_channel(haar_unitary(3, 1)), np.eye(3) / 3)
    assert res.converged and res.steps == 1


def test_power_iteration_reports_failure():
    res = power_iteration(unitary_channel(PAULI[0]), np.diag([1.0, 0.0]), max_steps=50)
    assert not res.converged and res.steps == 50


# -- commutant and uniqueness ---------------------------------------------

def test_pauli_pair_irreducible():
    rep = commutant([PAULI[0], PAULI[1]])
    assert rep.dim == 1 and not rep.reducible


def test_diagonal_unitary_blocks():
    rep = commutant([PAULI[2]])
    assert rep.dim == 2 and rep.verdict == "reducible"
    assert sorted(len(b) for b in rep.blocks) == [1, 1]
    assert rep.off_block < 1e-12


def test_identity_commutant_is_everything():
    assert commutant([np.eye(3)]).dim == 9


def test_commutant_rejects_non_unitary():
    with pytest.raises(InvalidStateError):
        commutant([np.diag([1.0, 2.0])])


def test_haar_families_unique():
    rng = np.random.default_rng(0)
    for n in (2, 3, 4):
        us = [haar_unitary(n, rng) for _ in range(2)]
        v = uniqueness_verdict([0.5, 0.5], us)
        assert v.unique and v.multiplicity == 1 and v.consistent


def test_hidden_blocks_found():
    rng = np.random.default_rng(1)
    for n in (3, 4):
        fam = block_diagonal_family(rng, n, 3)
        rep = commutant(fam)
        assert rep.reducible
        assert rep.off_block < 1e-8
        rho = block_diagonal_invariant_state(rep)
        ch = random_external_field([0.2, 0.3, 0.5], fam)
        assert np.max(np.abs(ch(rho) - rho)) < 1e-10


def test_block_state_weights():
    rep = commutant([PAULI[2]])
    rho = block_diagonal_invariant_state(rep, [0.25, 0.75])
    assert np.allclose(np.sort(np.linalg.eigvalsh(rho)), [0.25, 0.75])
    with pytest.raises(PreconditionError):
        block_diagonal_invariant_state(rep, [0.5, 0.6])


def test_uniqueness_needs_positive_probabilities():
    with pytest.raises(PreconditionError):
        uniqueness_verdict([1.0, 0.0], [PAULI[0], PAULI[1]])


def test_commutant_json():
    doc = json.loads(json.dumps(commutant([PAULI[2]]).to_json()))
    assert doc["verdict"] == "reducible" and doc["dim"] == 2


# -- block lemma ----------------------------------------------------------

def test_zero_block_forces_opposite_block():
    rng = np.random.default_rng(3)
    for n in (2, 3, 5):
        u, a = zero_block_unitary(rng, n)
        res = lemma1_validate(u, a)
        assert res.precondition_met and res.holds


def test_haar_unitary_fails_precondition():
    res = lemma1_validate(haar_unitary(4, 2), [0])
    assert not res.precondition_met
    assert res.holds is None


def test_lemma_subset_checks():
    with pytest.raises(PreconditionError):
        lemma1_validate(np.eye(3), [0, 1, 2])
    with pytest.raises(InvalidStateError):
        lemma1_validate(np.diag([1.0, 2.0]), [0])
