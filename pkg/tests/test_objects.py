"""Named states, measurement validation and tomographic bases."""

import numpy as np
import pytest

from entwit.linalg import Operator, identity
from entwit.objects import (
    Measurement,
    TomographicBasis,
    bell_basis,
    bell_states,
    born,
    computational_basis,
    max_entangled,
    mu_states,
    tomographic_basis,
)
from entwit.witness import Witness, beta_coefficients


def test_bell_basis_order_and_completeness():
    m = bell_basis()
    phi_p = np.array([1, 0, 0, 1]) / np.sqrt(2)
    np.testing.assert_allclose(m.effects[0].mat, np.outer(phi_p, phi_p), atol=1e-15)
    total = sum(e.mat for e in m.effects)
    np.testing.assert_allclose(total, np.eye(4), atol=1e-12)
    assert m.projective
    # orthogonality of distinct elements
    np.testing.assert_allclose((m.effects[0] @ m.effects[2]).mat, np.zeros((4, 4)), atol=1e-12)


def test_bell_basis_projectors_are_real():
    for eff in bell_basis().effects:
        np.testing.assert_array_equal(eff.mat.imag, np.zeros((4, 4)))
        np.testing.assert_array_equal(eff.mat, eff.mat.T)


def test_bell_state_order():
    phi_p, phi_m, psi_p, psi_m = bell_states()
    s = 1 / np.sqrt(2)
    np.testing.assert_allclose(phi_m.amplitudes, [s, 0, 0, -s])
    np.testing.assert_allclose(psi_p.amplitudes, [0, s, s, 0])
    np.testing.assert_allclose(psi_m.amplitudes, [0, s, -s, 0])


def test_measurement_validator_rejects_bad_sets():
    p0 = Operator((2,), np.diag([1.0, 0.0]))
    with pytest.raises(ValueError):
        Measurement((2,), (p0,))  # does not sum to identity
    with pytest.raises(ValueError):
        Measurement((2,), (Operator((2,), np.diag([1.5, 1.0])), Operator((2,), np.diag([-0.5, 0.0]))))
    with pytest.raises(ValueError):
        Measurement((2,), ())


def test_measurement_projective_flag():
    assert computational_basis((2, 2)).projective
    third = np.eye(4) / 3.0
    povm = Measurement((2, 2), tuple(Operator((2, 2), third) for _ in range(3)))
    assert not povm.projective
    assert not povm.is_rank_one_projective()
    assert bell_basis().is_rank_one_projective()


def test_single_effect_measurement():
    m = Measurement((2, 2), (identity((2, 2)),))
    assert m.projective
    assert not m.is_rank_one_projective()


def test_max_entangled():
    v = max_entangled(3)
    assert v.dims == (3, 3)
    on_diag = [v.amplitudes[i * 3 + i] for i in range(3)]
    np.testing.assert_allclose(on_diag, np.full(3, 1 / np.sqrt(3)))
    assert np.count_nonzero(v.amplitudes) == 3
    np.testing.assert_allclose(max_entangled(2).amplitudes, bell_states()[0].amplitudes)
    with pytest.raises(ValueError):
        max_entangled(1)


def test_max_entangled_marginal_is_maximally_mixed():
    from entwit.linalg import partial_trace

    rho = max_entangled(3).projector()
    np.testing.assert_allclose(partial_trace(rho, 0).mat, np.eye(3) / 3, atol=1e-14)


def test_mu_states():
    mus = mu_states()
    assert len(mus) == 6
    s = 1 / np.sqrt(2)
    np.testing.assert_allclose(mus[2].amplitudes, [s, s])  # (|0>+|1>)/sqrt2
    np.testing.assert_allclose(mus[5].amplitudes, [s, -1j * s])  # (|0>-i|1>)/sqrt2
    assert abs(mus[0].overlap(mus[1])) == pytest.approx(0.0)


def test_tomographic_basis_default_d2():
    b = tomographic_basis(2)
    assert len(b.projectors) == 4
    np.testing.assert_allclose(b.projectors[0].mat, np.diag([1.0, 0.0]))
    np.testing.assert_allclose(b.projectors[1].mat, np.diag([0.0, 1.0]))
    mus = mu_states()
    np.testing.assert_allclose(b.projectors[2].mat, mus[2].projector().mat, atol=1e-15)
    np.testing.assert_allclose(b.projectors[3].mat, mus[4].projector().mat, atol=1e-15)
    # 4x4 Gram determinant: nonsingular
    assert abs(np.linalg.det(b.gram())) > 1e-3
    assert np.isfinite(b.gram_condition())


@pytest.mark.parametrize("d", [2, 3, 4])
def test_tomographic_basis_counts_and_projectors(d):
    b = tomographic_basis(d)
    assert len(b.projectors) == d * d
    for tau in b.projectors:
        np.testing.assert_allclose((tau @ tau).mat, tau.mat, atol=1e-12)
        assert tau.trace().real == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_tomographic_basis_spans_hermitian_space(d):
    # round-trip through the witness-engine coefficient solve
    rng = np.random.default_rng(42 + d)
    h = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = (h + h.conj().T) / 2
    w = Witness(Operator((d,), h))
    beta, residual = beta_coefficients(w, tomographic_basis(d))
    assert residual <= 1e-9
    assert beta.shape == (d * d,)


def test_tomographic_basis_rejects_deficient_sets():
    p0 = Operator((2,), np.diag([1.0, 0.0]))
    p1 = Operator((2,), np.diag([0.0, 1.0]))
    with pytest.raises(ValueError):
        TomographicBasis(2, (p0, p1, p0, p1))  # linearly dependent
    with pytest.raises(ValueError):
        TomographicBasis(2, (p0, p1, p0))  # wrong count


def test_born_values():
    p0 = Operator((2,), np.diag([1.0, 0.0]))
    assert born(p0, p0) == pytest.approx(1.0)
    phi = bell_states()[0].projector()
    assert born(phi, 0.25 * identity((2, 2))) == pytest.approx(0.25)


def test_born_complement():
    rng = np.random.default_rng(9)
    g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    rho = Operator((2,), g @ g.conj().T / np.trace(g @ g.conj().T).real)
    tau = tomographic_basis(2).projectors[2]
    comp = identity((2,)) - tau
    assert born(comp, rho) == pytest.approx(1.0 - born(tau, rho), abs=1e-12)


def test_born_rejects_bad_states():
    p0 = Operator((2,), np.diag([1.0, 0.0]))
    with pytest.raises(ValueError):
        born(p0, Operator((2,), np.diag([0.5, 0.6])))  # trace != 1
    with pytest.raises(ValueError):
        born(p0, Operator((2,), np.diag([1.5, -0.5])))  # not PSD
    with pytest.raises(ValueError):
        born(2.0 * identity((2,)), Operator((2,), np.diag([0.5, 0.5])))  # p outside [0,1]
