"""PPT checks and the element / measurement classifiers."""

import numpy as np
import pytest

from entwit.linalg import Operator, PureVector, identity, tensor_vector
from entwit.objects import bell_basis, bell_states, computational_basis
from entwit.sampling import Seed, random_product_state, random_pure_state
from entwit.separability import (
    ENTANGLED,
    SEPARABLE,
    UNDETERMINED,
    NptEvidence,
    PptSeparable,
    ProductDecomposition,
    bipartitions,
    classify_element,
    classify_measurement,
    ppt_check,
)

from _oracles import ghz_vector, partial_transpose_loops


def test_bipartitions():
    assert bipartitions(2) == [(0,)]
    assert sorted(bipartitions(3)) == [(0,), (0, 1), (0, 2)]
    with pytest.raises(ValueError):
        bipartitions(1)


def test_ppt_check_bell_state():
    holds, eig = ppt_check(bell_states()[0].projector(), (0,))
    assert not holds
    assert eig == pytest.approx(-0.5, abs=1e-12)


def test_ppt_check_product_projector_and_mixed():
    from entwit.linalg import basis_vector

    holds, eig = ppt_check(basis_vector((2, 2), 1).projector(), (0,))
    assert holds
    assert eig == pytest.approx(0.0, abs=1e-12)
    holds, eig = ppt_check(0.25 * identity((2, 2)), (0,))
    assert holds
    assert eig == pytest.approx(0.25, abs=1e-12)


def test_ppt_check_rejects_non_psd():
    with pytest.raises(ValueError):
        ppt_check(identity((2, 2)) - 3.0 * bell_states()[0].projector(), (0,))


def test_classify_singlet_is_entangled():
    verdict = classify_element(bell_states()[3].projector())
    assert verdict.status == ENTANGLED
    assert isinstance(verdict.evidence, NptEvidence)
    # 4x4 eigendecomposition oracle: PT min eigenvalue -1/2
    assert verdict.evidence.min_eigenvalue == pytest.approx(-0.5, abs=1e-12)


def test_classify_product_projector_separable():
    plus = PureVector((2,), [1, 1]).normalize()
    zero = PureVector((2,), [1, 0])
    elem = tensor_vector([plus, zero]).projector()
    verdict = classify_element(elem)
    assert verdict.status == SEPARABLE
    assert isinstance(verdict.evidence, PptSeparable)


def test_classify_ghz_entangled_by_cut():
    # 8x8 partial-transpose eigendecomposition oracle for the 1|23 cut
    ghz = ghz_vector(3)
    mat = np.outer(ghz, ghz.conj())
    oracle_eig = np.linalg.eigvalsh(partial_transpose_loops(mat, (2, 2, 2), 0)).min()
    assert oracle_eig == pytest.approx(-0.5, abs=1e-12)
    verdict = classify_element(Operator((2, 2, 2), mat))
    assert verdict.status == ENTANGLED
    assert verdict.evidence.min_eigenvalue == pytest.approx(oracle_eig, abs=1e-10)


def test_classify_three_qubit_product_projector():
    # PPT everywhere but beyond 2x2/2x3: needs the decomposition search
    states = random_product_state((2, 2, 2), Seed(31))
    elem = tensor_vector(states).projector()
    verdict = classify_element(elem, seed=Seed(32))
    assert verdict.status == SEPARABLE
    assert isinstance(verdict.evidence, ProductDecomposition)
    assert verdict.evidence.residual <= 1e-7
    rec = verdict.evidence.reconstruct((2, 2, 2))
    assert rec.allclose(elem, tol=1e-6)


def test_classify_separable_mixture_beyond_ppt_regime():
    # separable rank-2 mixture on three qubits: greedy pursuit must find it
    a = tensor_vector(random_product_state((2, 2, 2), Seed(41))).projector()
    b = tensor_vector(random_product_state((2, 2, 2), Seed(42))).projector()
    elem = Operator((2, 2, 2), 0.6 * a.mat + 0.4 * b.mat)
    verdict = classify_element(elem, seed=Seed(43), search_restarts=16)
    assert verdict.status in (SEPARABLE, UNDETERMINED)
    if verdict.status == SEPARABLE:
        assert verdict.evidence.residual <= 1e-7


def test_classify_rejects_bad_inputs():
    with pytest.raises(ValueError):
        classify_element(identity((2,)))  # single factor
    with pytest.raises(ValueError):
        classify_element(-1.0 * identity((2, 2)))  # not PSD


def test_classify_measurement_bell_basis():
    result = classify_measurement(bell_basis())
    assert result.verdict == ENTANGLED
    assert all(v.status == ENTANGLED for v in result.elements)


def test_classify_measurement_computational():
    result = classify_measurement(computational_basis((2, 2)))
    assert result.verdict == SEPARABLE
    assert all(v.status == SEPARABLE for v in result.elements)


def test_classify_measurement_mixed_case():
    from entwit.objects import Measurement

    phi = bell_states()[0].projector()
    m = Measurement((2, 2), (phi, identity((2, 2)) - phi))
    result = classify_measurement(m)
    assert result.verdict == ENTANGLED
    assert result.elements[0].status == ENTANGLED
    assert result.elements[1].status == SEPARABLE  # PPT in 2x2 is sufficient


@pytest.mark.parametrize("n", [100])
def test_no_false_entangled_on_product_projectors(n):
    for k in range(n):
        states = random_product_state((2, 2), Seed(1000, k))
        verdict = classify_element(tensor_vector(states).projector())
        assert verdict.status == SEPARABLE, f"sample {k} misclassified"


@pytest.mark.parametrize("n", [100])
def test_no_false_separable_on_entangled_projectors(n):
    found = 0
    for k in range(n):
        psi = random_pure_state(4, Seed(2000, k))
        elem = Operator((2, 2), np.outer(psi.amplitudes, psi.amplitudes.conj()))
        verdict = classify_element(elem)
        assert verdict.status == ENTANGLED, f"sample {k} misclassified"
        found += 1
    assert found == n
