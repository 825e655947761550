"""Swap-steering tables, the steering functional and its bounds."""

import numpy as np
import pytest

from entwit.linalg import Operator, identity, tensor_many, trace_inner
from entwit.objects import (
    Measurement,
    bell_basis,
    computational_basis,
    max_entangled,
    tomographic_basis,
)
from entwit.sampling import Seed, random_density_matrix, random_unitary
from entwit.steering import (
    CorrelationTable,
    SohsModel,
    SohsSource,
    alice_effect,
    conditional_states,
    functional_S,
    quantum_correlations,
    quantum_value_closed_form,
    random_sohs_model,
    sohs_correlations,
    steering_sweep,
    steering_threshold,
    steering_witness_for,
    white_noise_source,
)
from entwit.witness import attach_beta, builtin_wbm, builtin_wbm_prime


@pytest.fixture(scope="module")
def wp():
    return attach_beta(builtin_wbm_prime(), tomographic_basis(2))


def test_alice_effect():
    basis = tomographic_basis(2)
    tau = alice_effect(basis, (1,))
    np.testing.assert_allclose(tau.mat, basis.projectors[1].mat)
    prod = alice_effect(basis, (2, 3))
    assert prod.dims == (2, 2)
    assert np.linalg.matrix_rank(prod.mat) == 1
    complement = identity((2, 2)) - prod
    assert np.linalg.eigvalsh(complement.mat).min() >= -1e-12
    with pytest.raises(ValueError):
        alice_effect(basis, (4,))


def test_conditional_states_are_transposed_elements():
    conditionals, p_b = conditional_states(bell_basis())
    np.testing.assert_allclose(p_b, np.full(4, 0.25), atol=1e-12)
    for r_b, eff in zip(conditionals, bell_basis().effects):
        # Bell projectors are real, so E^T = E entrywise
        np.testing.assert_allclose(4.0 * r_b.mat, eff.mat, atol=1e-12)


def test_conditional_states_transpose_for_complex_elements():
    u = random_unitary(4, Seed(19))
    effs = tuple(
        Operator((2, 2), np.outer(u[:, k], u[:, k].conj())) for k in range(4)
    )
    bob = Measurement((2, 2), effs)
    conditionals, p_b = conditional_states(bob)
    for r_b, eff in zip(conditionals, effs):
        np.testing.assert_allclose(4.0 * r_b.mat, eff.mat.T, atol=1e-12)


def test_quantum_table_trivial_bob():
    bob = Measurement((2, 2), (identity((2, 2)),))
    rho_a = random_density_matrix(2, 2, Seed(3))
    rho_b = random_density_matrix(2, 2, Seed(4))
    sources = [
        Operator((2, 2), np.kron(rho_a.mat, np.eye(2) / 2)),
        Operator((2, 2), np.kron(rho_b.mat, np.eye(2) / 2)),
    ]
    basis = tomographic_basis(2)
    table = quantum_correlations(bob, sources, basis)
    for i in range(4):
        for j in range(4):
            expected = (
                trace_inner(basis.projectors[i], rho_a).real
                * trace_inner(basis.projectors[j], rho_b).real
            )
            assert table.probs[0, 0, i, j] == pytest.approx(expected, abs=1e-12)


def test_quantum_table_bell_marginals_and_validation(wp):
    table = quantum_correlations(bell_basis())
    np.testing.assert_allclose(table.outcome_marginal(), np.full(4, 0.25), atol=1e-12)
    table.validate()


def test_table_validation_rejects_signaling():
    probs = np.zeros((2, 1, 4, 4))
    probs[0] = 0.7
    probs[1] = 0.3
    probs[1, 0, 0, 0] = 0.9  # breaks input-independence
    with pytest.raises(ValueError):
        CorrelationTable(probs, (2, 2))


def test_functional_s_bell_scenario(wp):
    table = quantum_correlations(bell_basis())
    value, arg_b = functional_S(table, wp.beta)
    assert value == pytest.approx(0.125, abs=1e-9)
    assert arg_b == 0
    zero = functional_S(table, np.zeros_like(wp.beta))
    assert zero == (0.0, 0)


def test_closed_form_matches_table(wp):
    assert quantum_value_closed_form(bell_basis(), wp) == pytest.approx(0.125, abs=1e-12)
    wbm = attach_beta(builtin_wbm(), tomographic_basis(2))
    assert quantum_value_closed_form(bell_basis(), wbm) == pytest.approx(0.125, abs=1e-12)


def test_closed_form_separable_bob_nonpositive(wp):
    value = quantum_value_closed_form(computational_basis((2, 2)), wp)
    assert value <= 1e-12


def test_closed_form_requires_beta():
    with pytest.raises(ValueError):
        quantum_value_closed_form(bell_basis(), builtin_wbm_prime())


def test_closed_form_agrees_with_table_for_random_measurements():
    for k in range(100):
        u = random_unitary(4, Seed(500, k))
        effs = tuple(Operator((2, 2), np.outer(u[:, i], u[:, i].conj())) for i in range(4))
        bob = Measurement((2, 2), effs)
        w, _ = steering_witness_for(bob)
        closed = quantum_value_closed_form(bob, w)
        table_value, _ = functional_S(quantum_correlations(bob), w.beta)
        assert closed == pytest.approx(table_value, abs=1e-9)
        assert table_value > 0.0  # entangled rank-one projective bob always steers


def test_sohs_tables_and_bound(wp):
    worst = -np.inf
    for k in range(120):
        model = random_sohs_model(Seed(6000, k), 2, 2)
        table = sohs_correlations(model)
        table.validate(tol=1e-12)
        value, _ = functional_S(table, wp.beta)
        worst = max(worst, value)
    assert worst <= 1e-9


def test_sohs_single_mixed_state():
    basis = tomographic_basis(2)
    src = SohsSource(np.array([1.0]), (Operator((2,), np.eye(2) / 2),))
    response = np.full((1, 1, 3), 1.0 / 3.0)
    model = SohsModel((src, src), response)
    table = sohs_correlations(model, basis)
    # p(0, b | i, j) = p(b) * Tr(tau_i I/2) Tr(tau_j I/2) = (1/3) * (1/4)
    np.testing.assert_allclose(table.probs[0], np.full((3, 4, 4), 1.0 / 12.0), atol=1e-12)


def test_sohs_deterministic_response():
    src = SohsSource(np.array([1.0]), (Operator((2,), np.diag([1.0, 0.0])),))
    response = np.zeros((1, 1, 2))
    response[..., 0] = 1.0
    model = SohsModel((src, src), response)
    table = sohs_correlations(model)
    np.testing.assert_allclose(table.probs[:, 1], np.zeros((2, 4, 4)), atol=1e-15)


def test_gamma_expansion_single_hidden_state(wp):
    rhos = [random_density_matrix(2, 2, Seed(61)), random_density_matrix(2, 1, Seed(62))]
    sources = tuple(SohsSource(np.array([1.0]), (r,)) for r in rhos)
    model = SohsModel(sources, np.ones((1, 1, 1)))
    value, _ = functional_S(sohs_correlations(model), wp.beta)
    expected = -trace_inner(wp.operator, tensor_many(rhos)).real
    assert value == pytest.approx(expected, abs=1e-10)


def test_white_noise_sweep_and_threshold(wp):
    rows = steering_sweep(bell_basis(), wp, [0.0, 0.5, 1.0])
    assert rows[0]["S_value"] < 0 < rows[-1]["S_value"]
    assert rows[-1]["S_value"] == pytest.approx(0.125, abs=1e-9)
    threshold = steering_threshold(bell_basis(), wp)
    # W' = I/2 - (sxsx + szsz)/2 picks up the two-correlator visibility 1/sqrt(2)
    assert threshold == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-6)


def test_white_noise_source_validation():
    with pytest.raises(ValueError):
        white_noise_source(2, 1.5)
    rho = white_noise_source(2, 0.3)
    assert rho.trace().real == pytest.approx(1.0, abs=1e-12)


def test_heterogeneous_dimensions_steering():
    # one qubit pair and one qutrit pair feeding a product-projector bob
    d_dims = (2, 3)
    phi2 = max_entangled(2)
    phi3 = max_entangled(3)
    e0 = tensor_many(
        [Operator((2,), np.diag([1.0, 0.0])), Operator((3,), np.diag([1.0, 0.0, 0.0]))]
    )
    bob = Measurement(d_dims, (e0, identity(d_dims) - e0))
    bases = (tomographic_basis(2), tomographic_basis(3))
    table = quantum_correlations(bob, [phi2, phi3], bases)
    table.validate()
    assert table.probs.shape == (2, 2, 4, 9)
    np.testing.assert_allclose(
        table.outcome_marginal(), [1.0 / 6.0, 5.0 / 6.0], atol=1e-12
    )
