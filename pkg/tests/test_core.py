import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from arnn_botnet.core import (
    ArnnModel, ExternalInputs, StateProbabilities, TOL_FP, classify, decision_ratio, fixed_point_residual,
    init_neutral, solve_fixed_point, stationary_probability,
)
from arnn_botnet.errors import ConvergenceError, InvalidParameterError, InvalidSizeError

from oracles import picard, random_model


def test_init_neutral_weights():
    m = init_neutral(3, 1.0)
    expected = np.full((3, 3), 0.5)
    np.fill_diagonal(expected, 0.0)
    np.testing.assert_array_equal(m.excite_x, expected)
    np.testing.assert_array_equal(m.excite_y, expected)
    np.testing.assert_array_equal(m.inhibit_x, expected)


def test_init_neutral_rejects_single_node():
    with pytest.raises(InvalidSizeError):
        init_neutral(1)


def test_neutral_two_nodes():
    s = solve_fixed_point(init_neutral(2), ExternalInputs([0.75, 0.75], [0.75, 0.75]))
    np.testing.assert_allclose(s.x_excited, 0.5, atol=1e-12)
    np.testing.assert_allclose(s.y_excited, 0.5, atol=1e-12)
    assert s.residual < TOL_FP


@pytest.mark.parametrize("n", [2, 5, 10, 50])
@pytest.mark.parametrize("W", [1.0, 2.5])
def test_neutral_calibration(n, W):
    s = solve_fixed_point(init_neutral(n, W), ExternalInputs.neutral(n, W))
    assert np.abs(s.x_excited - 0.5).max() < TOL_FP
    assert np.abs(s.y_excited - 0.5).max() < TOL_FP


def test_model_validation():
    w = np.array([[0.0, 0.5], [0.5, 0.0]])
    with pytest.raises(InvalidParameterError):
        ArnnModel(1.0, w + np.eye(2) * 0.1, w)
    with pytest.raises(InvalidParameterError):
        ArnnModel(1.0, w * 3, w)
    with pytest.raises(InvalidParameterError):
        ArnnModel(0.0, w, w)
    with pytest.raises(InvalidSizeError):
        ArnnModel(1.0, w, np.zeros((3, 3)))


def test_model_is_immutable():
    m = init_neutral(3)
    with pytest.raises(ValueError):
        m.excite_x[0, 1] = 0.2


def test_saturated_two_node_against_oracle():
    # the unclamped equations put Q near 3.7 here, so X saturates at the clamp

    wx = np.array([[0.0, 0.9], [0.9, 0.0]])
    wy = np.array([[0.0, 0.1], [0.1, 0.0]])
    Lam, lam = np.array([0.9, 0.9]), np.array([0.1, 0.1])
    s = solve_fixed_point(ArnnModel(1.0, wx, wy), ExternalInputs(Lam, lam))
    Q, q = picard(wx, wy, 1.0, Lam, lam)
    np.testing.assert_allclose(s.x_excited, Q, atol=1e-8)
    np.testing.assert_allclose(s.y_excited, q, atol=1e-8)
    np.testing.assert_allclose(s.x_excited, 1 - 1e-6)
    # no solution inside the box; the residual says so
    assert s.residual > 0.1


@pytest.mark.parametrize("seed", range(10))
def test_random_small_models_against_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    wx, wy = random_model(rng, n)
    A = rng.random(n)
    s = solve_fixed_point(ArnnModel(1.0, wx, wy), ExternalInputs.from_attack_ratio(A))
    Q, q = picard(wx, wy, 1.0, A, 1 - A)
    np.testing.assert_allclose(s.x_excited, Q, atol=1e-8)
    np.testing.assert_allclose(s.y_excited, q, atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_symmetry(n, seed):
    rng = np.random.default_rng(seed)
    wx, _ = random_model(rng, n)
    a = rng.random(n)
    s = solve_fixed_point(ArnnModel(1.0, wx, wx), ExternalInputs(a, a))
    np.testing.assert_allclose(s.x_excited, s.y_excited, atol=TOL_FP)


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 16), st.integers(0, 2**32 - 1))
def test_residual_and_ratio_ordering(n, seed):
    rng = np.random.default_rng(seed)
    wx, wy = random_model(rng, n)
    m = ArnnModel(1.0, wx, wy)
    inputs = ExternalInputs.from_attack_ratio(rng.random(n))
    s = solve_fixed_point(m, inputs)
    assert s.residual < 1e-8
    assert fixed_point_residual(m, inputs, s) == s.residual
    L = decision_ratio(s)
    d = s.x_excited - s.y_excited
    big = np.abs(d) > 1e-12
    np.testing.assert_array_equal(np.sign(L[big] - 1), np.sign(d[big]))


def test_non_convergence_raises():
    m = init_neutral(4)
    with pytest.raises(ConvergenceError) as info:
        solve_fixed_point(m, ExternalInputs.from_attack_ratio(np.linspace(0, 1, 4)), max_iter=2)
    assert info.value.iterations == 2


def test_input_length_mismatch():
    with pytest.raises(InvalidSizeError):
        solve_fixed_point(init_neutral(3), ExternalInputs.from_attack_ratio([0.1, 0.2]))


@pytest.mark.parametrize("Q, q, L", [(0.5, 0.5, 1.0), (0.8, 0.2, 16.0), (0.2, 0.8, 1 / 16)])
def test_decision_ratio_values(Q, q, L):
    s = StateProbabilities([Q], [q])
    assert decision_ratio(s)[0] == pytest.approx(L, rel=1e-12)


def test_classify_strict_threshold():
    assert classify(StateProbabilities([0.5, 0.5], [0.5, 0.5]), 0.98).compromised.tolist() == [1, 1]
    assert classify(StateProbabilities([0.6], [0.6]), 1.0).compromised.tolist() == [0]
    d = classify(StateProbabilities([0.9], [0.1]), 1.0)
    assert d.compromised.tolist() == [1]
    assert d.ratio[0] == pytest.approx(81.0)
    with pytest.raises(InvalidParameterError):
        classify(StateProbabilities([0.9], [0.1]), 0.0)


def test_stationary_probability_empty_queues():
    assert stationary_probability(StateProbabilities([0.5], [0.5]), [0], [0]) == pytest.approx(0.25)


def test_stationary_probability_sums_to_one():
    s = StateProbabilities([0.3, 0.2], [0.25, 0.1])
    R = 20  # truncation; the largest neglected tail is 0.3**20
    total = sum(
        stationary_probability(s, [H0, H1], [h0, h1])
        for H0 in range(R) for H1 in range(R) for h0 in range(R) for h1 in range(R)
    )
    assert total == pytest.approx(1.0, abs=1e-9)


def test_stationary_probability_near_saturation():
    s = StateProbabilities([1 - 1e-6], [0.5])
    assert stationary_probability(s, [0], [0]) < 1e-6
