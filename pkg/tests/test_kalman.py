import numpy as np
import pytest

from laddertwin.errors import DimensionMismatch, SingularInnovationCovariance
from laddertwin.kalman import FilterState, predict, run_filter, update
from laddertwin.model import CausalFactors, EstimationConfig, Hyperparameters, MultiChannelSeries
from laddertwin.pipeline import ols_oracle, regressors, unpack_factors
from laddertwin.statespace import TransitionModel, state_layout
from laddertwin.synth import SynthSpec, simulate

from .oracles import design, kalman_step_dense, ridge

IRW_A = np.array([[1.0, 1.0], [0.0, 1.0]])


def _synthetic_four(n=10_000, seed=7):
    s0 = np.array([[0, 0, 0, 0], [0.3, 0, 0, 0], [0, 0.25, 0, 0], [0, 0, 0, 0]], float)
    s1 = np.array([[0.5, 0, 0, 0], [0, 0.4, 0, 0.2], [0, 0, 0.3, 0], [0.25, 0, 0, 0.6]])
    return simulate(SynthSpec(CausalFactors(s0, (s1,)), 1.0, n, seed=seed))


# predict ---------------------------------------------------------------

def test_predict_slope_feeds_value():
    out = predict(FilterState(np.array([1.0, 2.0]), np.eye(2)), TransitionModel(IRW_A, np.zeros((2, 2))))
    np.testing.assert_array_equal(out.mean, [3, 2])


def test_predict_irw_covariance():
    out = predict(FilterState(np.array([1.0, 0.0]), np.eye(2)), TransitionModel(IRW_A, np.zeros((2, 2))))
    np.testing.assert_array_equal(out.mean, [1, 0])
    np.testing.assert_array_equal(out.covariance, [[2, 1], [1, 1]])


def test_predict_identity_is_noop():
    fs = FilterState(np.array([0.3, -1.0]), np.array([[2.0, 0.5], [0.5, 1.0]]))
    out = predict(fs, TransitionModel(np.eye(2), np.zeros((2, 2))))
    np.testing.assert_array_equal(out.mean, fs.mean)
    np.testing.assert_array_equal(out.covariance, fs.covariance)


def test_predict_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        predict(FilterState(np.zeros(2), np.eye(2)), TransitionModel(np.eye(4), np.zeros((4, 4))))


# update ----------------------------------------------------------------

def test_update_scalar_textbook():
    fs, innov = update(FilterState(np.zeros(1), np.eye(1)), [[1.0]], [1.0], [[1.0]])
    np.testing.assert_allclose(fs.mean, [0.5])
    np.testing.assert_allclose(fs.covariance, [[0.5]])
    np.testing.assert_allclose(innov, [1.0])


def test_update_without_information():
    fs0 = FilterState(np.array([0.2, 0.1]), np.eye(2))
    fs, innov = update(fs0, np.zeros((1, 2)), [3.0], [[1.0]])
    np.testing.assert_array_equal(fs.mean, fs0.mean)
    np.testing.assert_allclose(fs.covariance, fs0.covariance)
    np.testing.assert_array_equal(innov, [3.0])


def test_update_value_slope_matches_dense_oracle():
    H = np.array([[1.0, 0.0]])
    fs, innov = update(FilterState(np.zeros(2), np.eye(2)), H, [2.0], [[1.0]])
    mean, cov = kalman_step_dense(np.zeros(2), np.eye(2), H, np.array([2.0]), np.eye(1))
    np.testing.assert_allclose(fs.mean, [1, 0])
    np.testing.assert_allclose(fs.mean, mean, atol=1e-14)
    np.testing.assert_allclose(fs.covariance, cov, atol=1e-14)
    assert innov[0] == 2.0


def test_update_random_against_dense_oracle():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n, m = 6, 3
        L = rng.normal(size=(n, n))
        P = L @ L.T + 0.1 * np.eye(n)
        H = rng.normal(size=(m, n))
        x, y = rng.normal(size=n), rng.normal(size=m)
        R = np.diag(rng.uniform(0.5, 2, m))
        fs, _ = update(FilterState(x, P), H, y, R)
        mean, cov = kalman_step_dense(x, P, H, y, R)
        np.testing.assert_allclose(fs.mean, mean, atol=1e-10)
        np.testing.assert_allclose(fs.covariance, cov, atol=1e-9)


def test_update_singular_innovation_covariance():
    with pytest.raises(SingularInnovationCovariance):
        update(FilterState(np.zeros(2), np.zeros((2, 2))), np.eye(2), np.ones(2), np.zeros((2, 2)))


# run_filter --------------------------------------------------------------

def test_ar1_single_channel():
    rng = np.random.default_rng(11)
    y = np.zeros(10_000)
    for n in range(1, len(y)):
        y[n] = 0.5 * y[n - 1] + 0.1 * rng.standard_normal()
    series = MultiChannelSeries(y[:, None])
    traj = run_filter(series, EstimationConfig())
    ols = ols_oracle(series).lagged[0][0, 0]
    assert abs(traj.values[-1, 0] - 0.5) <= 0.05
    assert abs(traj.values[-1, 0] - ols) <= 0.05


def test_zero_series_stays_at_prior():
    traj = run_filter(MultiChannelSeries(np.zeros((50, 3))), EstimationConfig())
    assert not traj.values.any() and not traj.slopes.any() and not traj.innovations.any()


def test_rows_before_first_update_hold_prior():
    series = _synthetic_four(n=200)
    traj = run_filter(series, EstimationConfig(lag_order=2))
    assert not traj.values[:2].any() and not traj.innovations[:2].any()
    assert np.all(np.isfinite(traj.values))


def test_blocked_matches_dense():
    series = _synthetic_four(n=400)
    for cfg in (EstimationConfig(), EstimationConfig(lag_order=2, hyper=Hyperparameters.integrated_random_walk(1e-3))):
        fast = run_filter(series, cfg, method="blocked")
        slow = run_filter(series, cfg, method="dense")
        np.testing.assert_allclose(fast.values, slow.values, atol=1e-9)
        np.testing.assert_allclose(fast.slopes, slow.slopes, atol=1e-9)
        np.testing.assert_allclose(fast.innovations, slow.innovations, atol=1e-9)
        np.testing.assert_allclose(fast.innovation_covariance_trace, slow.innovation_covariance_trace, rtol=1e-9)


def test_noise_free_dynamics_track_ols():
    series = _synthetic_four()
    cfg = EstimationConfig(hyper=Hyperparameters(process_noise_variance=0.0, initial_state_variance=1e6))
    traj = run_filter(series, cfg)
    ols = unpack_factors(ols_oracle(series), traj.layout)
    assert np.max(np.abs(traj.values[-1] - ols)) <= 1e-3


@pytest.mark.parametrize("c", [1e-2, 1.0, 1e2])
def test_value_only_filter_is_ridge(c):
    series = _synthetic_four(n=2000, seed=3)
    hyper = Hyperparameters(alpha=1, beta=0, gamma=1, process_noise_variance=0.0, initial_state_variance=c)
    traj = run_filter(series, EstimationConfig(hyper=hyper), method="dense")
    layout = traj.layout
    for k in range(4):
        X = design(series.data, k)
        np.testing.assert_array_equal(X, regressors(series.data, layout, k))
        expected = ridge(X, series.data[1:, k], hyper.measurement_noise_variance / c)
        np.testing.assert_allclose(traj.values[-1, layout.block(k)], expected, atol=1e-8)


def test_diffuse_value_only_filter_is_ols():
    series = _synthetic_four(seed=5)
    hyper = Hyperparameters(alpha=1, beta=0, gamma=1, process_noise_variance=0.0, initial_state_variance=1e6)
    traj = run_filter(series, EstimationConfig(hyper=hyper))
    for k in range(4):
        X = design(series.data, k)
        beta, *_ = np.linalg.lstsq(X, series.data[1:, k], rcond=None)
        assert np.max(np.abs(traj.values[-1, traj.layout.block(k)] - beta)) <= 1e-3


def test_innovations_are_white():
    series = _synthetic_four(n=20_000, seed=9)
    hyper = Hyperparameters(process_noise_variance=1e-8, initial_state_variance=1e6)
    innov = run_filter(series, EstimationConfig(hyper=hyper)).innovations[1000:]
    bound = 3 / np.sqrt(len(innov))
    for k in range(4):
        e = innov[:, k] - innov[:, k].mean()
        assert abs(np.dot(e[1:], e[:-1]) / np.dot(e, e)) <= bound


def test_joseph_covariance_stays_psd():
    rng = np.random.default_rng(2)
    n = 4
    hyper = Hyperparameters.integrated_random_walk(1e-3)
    A = np.kron(np.eye(n // 2), [[1.0, 1.0], [0.0, 1.0]])
    Q = np.kron(np.eye(n // 2), [[0.0, 0.0], [0.0, hyper.process_noise_variance]])
    tm = TransitionModel(A, Q)
    fs = FilterState(np.zeros(n), 1e3 * np.eye(n))
    for step in range(10_000):
        fs = predict(fs, tm)
        H = np.zeros((1, n))
        H[0, 0::2] = rng.normal(scale=10 ** rng.uniform(-3, 2), size=n // 2)
        fs, _ = update(fs, H, rng.normal(size=1), np.eye(1))
        P = fs.covariance
        scale = np.abs(P).max()
        assert np.abs(P - P.T).max() <= 1e-8 * scale
        assert np.linalg.eigvalsh(P).min() >= -1e-8 * np.trace(P)
