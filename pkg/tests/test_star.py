"""LHV bounds, star-network tables, the DI functional and detection."""

import itertools

import numpy as np
import pytest

from entwit.linalg import Operator, identity
from entwit.objects import Measurement, bell_basis, bell_states, computational_basis
from entwit.sampling import Seed
from entwit.star import (
    BellFunctional,
    OptimizerBudget,
    StarLocalModel,
    chsh,
    di_detect,
    functional_E,
    lhv_bound,
    local_model_correlations,
    mermin,
    optimize_bell_value,
    random_local_model,
    star_quantum_correlations,
)

from _oracles import chsh_lhv_by_hand, horodecki_chsh_bound

QUICK = OptimizerBudget(restarts=3, grid_points=25)


def partial_bell() -> Measurement:
    from entwit.linalg import basis_vector

    phi_p, phi_m = bell_states()[0], bell_states()[1]
    return Measurement(
        (2, 2),
        (
            phi_p.projector(),
            phi_m.projector(),
            basis_vector((2, 2), 1).projector(),
            basis_vector((2, 2), 2).projector(),
        ),
    )


def theta_state(theta: float) -> Operator:
    amp = np.zeros(4)
    amp[0] = np.cos(theta)
    amp[3] = np.sin(theta)
    return Operator((2, 2), np.outer(amp, amp))


def test_chsh_lhv_bound_exact():
    f = chsh()
    assert f.lhv_bound() == 2.0
    assert lhv_bound(f) == chsh_lhv_by_hand()


def test_lhv_bound_trivial_cases():
    zero = BellFunctional(np.zeros((2, 2, 2, 2)), (2, 2), (2, 2))
    assert lhv_bound(zero) == 0.0
    single = BellFunctional(np.array([[1.0, 1.0], [0.0, 0.0]]), (2,), (2,))
    assert lhv_bound(single) == 2.0


def test_lhv_bound_relabelings_of_chsh():
    base = chsh().coefficients
    for flip_a, flip_b, flip_x in itertools.product((0, 1), repeat=3):
        c = np.array(base)
        if flip_a:
            c = c[::-1]
        if flip_b:
            c = c[:, ::-1]
        if flip_x:
            c = c[:, :, ::-1]
        f = BellFunctional(c, (2, 2), (2, 2))
        assert lhv_bound(f) == 2.0


def test_lhv_enumeration_guard():
    big = BellFunctional(np.zeros((9, 9) + (9, 9)), (9,) * 2, (9,) * 2)
    with pytest.raises(ValueError, match="too large"):
        lhv_bound(big)


def test_mermin_lhv():
    assert mermin().lhv_bound() == 2.0


def test_chsh_on_uniform_distribution_is_zero():
    f = chsh()
    uniform = np.full((2, 2, 1, 2, 2), 0.25)
    table_like = uniform  # p(a,b,central,x,y) with a single central outcome
    value = float(np.einsum("abxy,abzxy->", f.coefficients, table_like)) / 4.0
    assert value == pytest.approx(0.0, abs=1e-12)


def test_optimizer_reaches_tsirelson_on_bell_state():
    rho = bell_states()[0].projector()
    value, settings = optimize_bell_value(rho, chsh(), seed=Seed(1), budget=QUICK)
    assert value == pytest.approx(2.0 * np.sqrt(2.0), abs=1e-6)
    assert value <= horodecki_chsh_bound(rho.mat) + 1e-9
    # returned settings are honest binary measurements
    for party in settings:
        for m in party:
            assert m.n_outcomes == 2


@pytest.mark.parametrize("theta", [np.pi / 16, np.pi / 8, np.pi / 4])
def test_optimizer_matches_horodecki_oracle(theta):
    rho = theta_state(theta)
    value, _ = optimize_bell_value(rho, chsh(), seed=Seed(2), budget=QUICK)
    oracle = horodecki_chsh_bound(rho.mat)
    closed_form = 2.0 * np.sqrt(1.0 + np.sin(2 * theta) ** 2)
    assert oracle == pytest.approx(closed_form, abs=1e-12)
    assert value == pytest.approx(oracle, abs=1e-4)


def test_star_table_factorizes_for_trivial_bob():
    bob = Measurement((2, 2), (identity((2, 2)),))
    settings = _chsh_settings()
    table = star_quantum_correlations(bob, settings)
    # with maximally entangled sources and trivial bob, parties see I/2 each,
    # so every joint outcome is 1/4 regardless of inputs
    np.testing.assert_allclose(table.probs[:, :, 0], np.full((2, 2, 2, 2), 0.25), atol=1e-12)
    table.validate()


def _chsh_settings():
    def meas(vec):
        obs = vec[0] * np.array([[0, 1], [1, 0]]) + vec[2] * np.array([[1, 0], [0, -1]])
        p0 = (np.eye(2) + obs) / 2.0
        return Measurement((2,), (Operator((2,), p0), Operator((2,), np.eye(2) - p0)), tol=1e-7)

    a0 = meas((0.0, 0.0, 1.0))
    a1 = meas((1.0, 0.0, 0.0))
    s = 1 / np.sqrt(2)
    b0 = meas((s, 0.0, s))
    b1 = meas((-s, 0.0, s))
    return ((a0, a1), (b0, b1))


def test_star_table_bell_bob_marginals():
    table = star_quantum_correlations(bell_basis(), _chsh_settings())
    np.testing.assert_allclose(table.central_marginal(), np.full(4, 0.25), atol=1e-12)
    table.validate()


def test_functional_e_with_textbook_settings():
    # the standard CHSH angles applied to every Bell element; phi+ attains
    # 2*sqrt(2) while the others reach it after per-element optimization
    table = star_quantum_correlations(bell_basis(), _chsh_settings())
    value, arg_b = functional_E(table, chsh())
    assert value == pytest.approx((2.0 * np.sqrt(2.0) - 2.0) / 4.0, abs=1e-9)
    assert arg_b == 0


def test_local_models_never_violate():
    f = chsh()
    worst = -np.inf
    for k in range(150):
        model = random_local_model(Seed(7000, k), 2)
        table = local_model_correlations(model)
        table.validate(tol=1e-12)
        value, _ = functional_E(table, f)
        worst = max(worst, value)
    assert worst <= 1e-9


def test_local_models_never_violate_mermin():
    f = mermin()
    worst = -np.inf
    for k in range(60):
        model = random_local_model(Seed(7500, k), 3)
        value, _ = functional_E(local_model_correlations(model), f)
        worst = max(worst, value)
    assert worst <= 1e-9


def test_local_model_deterministic_table():
    weights = (np.array([1.0]),) * 2
    responses = tuple(np.zeros((2, 2, 1)) for _ in range(2))
    for r in responses:
        r[:, 0, :] = 1.0  # always output 0
    central = np.zeros((1, 1, 2))
    central[..., 1] = 1.0
    model = StarLocalModel(weights, responses, central)
    table = local_model_correlations(model)
    assert set(np.unique(table.probs)) <= {0.0, 1.0}
    assert table.probs[0, 0, 1, 0, 0] == 1.0


def test_di_detect_bell_basis():
    report = di_detect(bell_basis(), chsh(), seed=Seed(3), budget=QUICK)
    assert report.verdict == "entangled (DI certified)"
    assert report.e_value == pytest.approx((2.0 * np.sqrt(2.0) - 2.0) / 4.0, abs=1e-6)
    assert report.table_cross_check == pytest.approx(report.e_value, abs=1e-9)
    for r in report.per_outcome:
        assert r.bell_value == pytest.approx(2.0 * np.sqrt(2.0), abs=1e-6)


def test_di_detect_computational_basis():
    report = di_detect(computational_basis((2, 2)), chsh(), seed=Seed(4), budget=QUICK)
    assert report.verdict == "not detected"
    assert report.e_value <= 1e-6


def test_di_detect_partial_bell():
    report = di_detect(partial_bell(), chsh(), seed=Seed(5), budget=QUICK)
    assert report.verdict == "entangled (DI certified)"
    assert report.argmax_outcome in (0, 1)
    assert report.per_outcome[2].e_value <= 1e-6
    assert report.per_outcome[3].e_value <= 1e-6


def test_di_detect_fixed_settings_mode():
    report = di_detect(bell_basis(), chsh(), seed=Seed(6), budget=QUICK, per_b_settings=False)
    assert report.mode == "fixed-settings"
    # with one setting set, at least the matching element still violates
    assert report.e_value > 1e-6


def test_di_detect_rejects_nonprojective_without_override():
    third = Measurement((2, 2), tuple(Operator((2, 2), np.eye(4) / 3.0) for _ in range(3)))
    with pytest.raises(ValueError, match="rank-one projective"):
        di_detect(third, chsh(), seed=Seed(7), budget=QUICK)
    report = di_detect(third, chsh(), seed=Seed(7), budget=QUICK, allow_mixed_elements=True)
    assert "no violation" in report.verdict


def test_di_detect_shape_mismatch():
    with pytest.raises(ValueError, match="parties"):
        di_detect(bell_basis(), mermin(), seed=Seed(8), budget=QUICK)
