import numpy as np
import pytest
from hypothesis import given, strategies as st

from laddertwin.errors import IncompleteWindow, InvalidDimension
from laddertwin.model import CausalFactors, FactorId, FactorKind, Hyperparameters
from laddertwin.pipeline import unpack_factors
from laddertwin.statespace import build_observation, build_transition, state_layout
from laddertwin.synth import SynthSpec, simulate


def test_four_bearings_have_28_states():
    layout = state_layout(4, 1)
    assert layout.factor_count == 28
    assert layout.count(FactorKind.INS) == 12
    assert layout.count(FactorKind.SNL) + layout.count(FactorKind.INL) == 16


def test_single_channel_layout():
    layout = state_layout(1, 1)
    assert layout.entries == (FactorId(0, 0, 1),)


def test_two_channel_ordering():
    assert state_layout(2, 1).entries == (
        FactorId(0, 1, 0), FactorId(0, 0, 1), FactorId(0, 1, 1),
        FactorId(1, 0, 0), FactorId(1, 0, 1), FactorId(1, 1, 1),
    )


@pytest.mark.parametrize("g, d", [(0, 1), (2, 0)])
def test_layout_rejects_bad_dims(g, d):
    with pytest.raises(InvalidDimension):
        state_layout(g, d)


@given(st.integers(1, 6), st.integers(1, 3))
def test_layout_roundtrip_and_count(g, d):
    layout = state_layout(g, d)
    assert layout.factor_count == g * ((d + 1) * g - 1)
    for i, fid in enumerate(layout.entries):
        assert layout.index_of(fid) == i
        assert not (fid.lag == 0 and fid.effect == fid.cause)
    assert len(set(layout.entries)) == layout.factor_count


def test_transition_integrated_random_walk_block():
    hyper = Hyperparameters(alpha=1, beta=1, gamma=1, delta=0, epsilon=1, process_noise_variance=0.01)
    tm = build_transition(hyper, state_layout(1, 1))
    np.testing.assert_array_equal(tm.A, [[1, 1], [0, 1]])
    np.testing.assert_array_equal(tm.Q, [[0, 0], [0, 0.01]])


def test_transition_without_noise_loading():
    tm = build_transition(Hyperparameters(delta=0, epsilon=0), state_layout(2, 1))
    assert not tm.Q.any()


def test_transition_is_block_diagonal():
    hyper = Hyperparameters(alpha=0.9, beta=0.3, gamma=0.7, delta=0.5, epsilon=2.0, process_noise_variance=0.1)
    layout = state_layout(3, 1)  # F = 15
    tm = build_transition(hyper, layout)
    a0 = np.array([[0.9, 0.3], [0, 0.7]])
    q0 = 0.1 * np.diag([0.25, 4.0])
    expected_a = np.zeros((30, 30))
    expected_q = np.zeros((30, 30))
    for f in range(15):
        expected_a[2 * f:2 * f + 2, 2 * f:2 * f + 2] = a0
        expected_q[2 * f:2 * f + 2, 2 * f:2 * f + 2] = q0
    np.testing.assert_array_equal(tm.A, expected_a)
    np.testing.assert_allclose(tm.Q, expected_q, rtol=0, atol=1e-15)
    assert np.all(np.linalg.eigvalsh(tm.Q) >= -1e-15)


def test_observation_two_channels():
    H = build_observation(np.array([[5.0, 7.0], [2.0, 3.0]]), state_layout(2, 1))
    expected = np.zeros((2, 12))
    expected[0, [0, 2, 4]] = [3, 5, 7]
    expected[1, [6, 8, 10]] = [2, 5, 7]
    np.testing.assert_array_equal(H, expected)


def test_observation_single_channel():
    np.testing.assert_array_equal(build_observation(np.array([[4.0], [9.0]]), state_layout(1, 1)), [[4.0, 0.0]])


def test_observation_zero_window():
    assert not build_observation(np.zeros((2, 3)), state_layout(3, 1)).any()


def test_observation_incomplete_window():
    with pytest.raises(IncompleteWindow):
        build_observation(np.zeros((1, 3)), state_layout(3, 1))


@given(st.integers(1, 5), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_observation_invariants(g, d, seed):
    layout = state_layout(g, d)
    window = np.random.default_rng(seed).normal(size=(d + 1, g))
    H = build_observation(window, layout)
    assert not H[:, 1::2].any()
    for f, fid in enumerate(layout.entries):
        col = H[:, 2 * f]
        assert col[fid.effect] == window[d - fid.lag, fid.cause]
        assert not np.delete(col, fid.effect).any()


@pytest.mark.parametrize("d", [1, 2])
def test_observation_reproduces_noise_free_model(d):
    rng = np.random.default_rng(3)
    g = 3
    s0 = np.array([[0, 0.2, 0], [0, 0, 0], [0.3, -0.25, 0]])
    lagged = tuple(np.diag(rng.uniform(0.1, 0.3, g)) + 0.05 * rng.normal(size=(g, g)) for _ in range(d))
    factors = CausalFactors(s0, lagged)
    series = simulate(SynthSpec(factors, 0.0, 200, seed=1, burn_in=0, initial=rng.normal(size=(d, g))))
    layout = state_layout(g, d)
    s_true = np.zeros(layout.state_dim)
    s_true[0::2] = unpack_factors(factors, layout)
    s_true[1::2] = rng.normal(size=layout.factor_count)  # slopes are never observed
    y = series.data
    for n in range(d, len(y)):
        assert np.max(np.abs(y[n] - build_observation(y[n - d:n + 1], layout) @ s_true)) <= 1e-12
