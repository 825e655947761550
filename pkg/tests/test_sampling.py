"""Seeded samplers and the product-state refinement engine."""

import numpy as np
import pytest

from entwit.linalg import Operator, basis_vector, identity
from entwit.sampling import (
    Seed,
    minimize_over_products,
    random_density_matrix,
    random_product_state,
    random_pure_state,
    random_unitary,
    refine_product_state,
    rng_from,
)


def test_random_pure_state_norm_and_determinism():
    v1 = random_pure_state(4, Seed(123, 7))
    v2 = random_pure_state(4, Seed(123, 7))
    assert v1.norm() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_array_equal(v1.amplitudes, v2.amplitudes)
    v3 = random_pure_state(4, Seed(123, 8))
    assert not np.array_equal(v1.amplitudes, v3.amplitudes)


def test_haar_first_component_moment():
    # Monte-Carlo oracle: |<0|psi>|^2 has mean 1/d and variance
    # (d-1)/(d^2 (d+1)) under Haar; check the sample mean within 3 sigma.
    d = 3
    n = 100_000
    rng = rng_from(Seed(2024))
    total = 0.0
    for _ in range(n):
        amp = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        amp /= np.linalg.norm(amp)
        total += abs(amp[0]) ** 2
    mean = total / n
    sigma = np.sqrt((d - 1) / (d ** 2 * (d + 1)) / n)
    assert abs(mean - 1.0 / d) <= 3.0 * sigma


def test_random_density_matrix_properties():
    rho = random_density_matrix(4, 2, Seed(5))
    assert rho.trace().real == pytest.approx(1.0, abs=1e-12)
    vals = np.linalg.eigvalsh(rho.mat)
    assert vals.min() >= -1e-12
    assert np.sum(vals > 1e-10) == 2
    pure = random_density_matrix(3, 1, Seed(6))
    np.testing.assert_allclose((pure @ pure).mat, pure.mat, atol=1e-10)
    with pytest.raises(ValueError):
        random_density_matrix(3, 4, Seed(7))


def test_random_unitary_is_unitary():
    u = random_unitary(5, Seed(8))
    np.testing.assert_allclose(u @ u.conj().T, np.eye(5), atol=1e-12)


def test_refine_reaches_minimum_from_plus_plus():
    from entwit.linalg import PureVector

    w = -1.0 * basis_vector((2, 2), 0).projector()  # -|00><00|
    plus = basis_vector((2,), 0).amplitudes + basis_vector((2,), 1).amplitudes
    start = [PureVector((2,), plus).normalize(), PureVector((2,), plus).normalize()]
    value, states = refine_product_state(w, start)
    assert value == pytest.approx(-1.0, abs=1e-10)
    for s in states:
        assert abs(s.amplitudes[0]) == pytest.approx(1.0, abs=1e-8)


def test_refine_on_identity_is_flat():
    value, _ = refine_product_state(identity((2, 2)), random_product_state((2, 2), Seed(1)))
    assert value == pytest.approx(1.0, abs=1e-12)


def test_refine_objective_never_increases():
    rng = rng_from(Seed(77))
    m = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    op = Operator((2, 2, 2), (m + m.conj().T) / 2)
    # run with a tiny budget repeatedly; the internal assertion enforces
    # monotonicity, so surviving without AssertionError is the check
    for k in range(5):
        refine_product_state(op, random_product_state(op.dims, Seed(77, k)), budget=30)


def test_minimize_over_products_reproducible():
    w = identity((2, 2)) - 2.0 * basis_vector((2, 2), 3).projector()
    v1, s1 = minimize_over_products(w, 20, Seed(3))
    v2, s2 = minimize_over_products(w, 20, Seed(3))
    assert v1 == v2
    assert v1 == pytest.approx(-1.0, abs=1e-9)
    for a, b in zip(s1, s2):
        np.testing.assert_array_equal(a.amplitudes, b.amplitudes)


def test_minimize_finds_entangled_minimum_upper_bound():
    # for I/2 - phi+ the product minimum is 0, not -1/2
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    w = 0.5 * identity((2, 2)) - Operator((2, 2), np.outer(phi, phi))
    value, _ = minimize_over_products(w, 60, Seed(4))
    assert value >= -1e-9
    assert value == pytest.approx(0.0, abs=1e-7)
