import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from etdw.errors import ConfigurationError, NumericError
from etdw.plant import (
    NIPVSS_ROUNDED_A,
    NIPVSS_ROUNDED_B,
    GaussianNoise,
    PlantModel,
    PlantState,
    SafetyBounds,
    check_safety,
    covariance_factor,
    nipvss_bounds,
    nipvss_model,
    propagate,
    step_plant,
    stream_rng,
)

C2 = np.hstack([np.eye(2), np.zeros((2, 2))])


def zero_noise(model, seed=0):
    return (GaussianNoise.from_seed(np.zeros((model.nx, model.nx)), seed, "process"),
            GaussianNoise.from_seed(np.zeros((model.ny, model.ny)), seed, "measurement"))


def test_identity_dynamics_without_noise():
    m = PlantModel(np.eye(4), np.zeros((4, 1)), C2, np.zeros((4, 4)), np.zeros((2, 2)))
    x = np.array([1.0, 0, 0, 0])
    nxt, y = step_plant(m, PlantState(x), [0.0], *zero_noise(m))
    assert np.array_equal(nxt.x, x)
    assert np.array_equal(y, [1.0, 0.0])
    assert nxt.k == 1


def test_rounded_pendulum_step_matches_hand_product():
    m = nipvss_model(rounded=True)
    nxt, _ = step_plant(m, PlantState(np.array([0, 0.01, 0, 0])), [0.0], *zero_noise(m))
    # row 2: 1.0015 * 0.01, row 4: 0.2945 * 0.01
    assert np.allclose(nxt.x, [0.0, 0.010015, 0.0, 0.002945], rtol=0, atol=1e-15)


def test_zero_noise_matches_direct_recursion(nipvss):
    m = PlantModel(nipvss.A, nipvss.B, nipvss.C, np.zeros((4, 4)), np.zeros((2, 2)))
    w, v = zero_noise(m)
    state = PlantState(np.array([0.01, -0.02, 0.0, 0.1]))
    x = state.x.copy()
    for k in range(50):
        u = np.array([np.sin(k)])
        state, _ = step_plant(m, state, u, w, v)
        x = m.A @ x + m.B @ u
    assert np.allclose(state.x, x, rtol=1e-14, atol=1e-16)
    assert state.k == 50


def test_process_noise_sample_covariance(nipvss):
    m = PlantModel(np.zeros((4, 4)), nipvss.B, nipvss.C, nipvss.sigma_w, nipvss.sigma_v)
    noise = GaussianNoise.from_seed(m.sigma_w, 7, "process")
    meas = GaussianNoise.from_seed(m.sigma_v, 7, "measurement")
    state = PlantState(np.zeros(4))
    xs = []
    for _ in range(2000):
        state = propagate(m, state, [0.0], noise)
        xs.append(state.x)
    xs = np.array(xs)
    assert np.all(xs[:, :2] == 0)  # singular covariance respected
    draws = noise.draw_many(100_000)
    for cov, samples in ((m.sigma_w, draws), (m.sigma_v, meas.draw_many(100_000))):
        est = samples.T @ samples / len(samples)
        assert np.linalg.norm(est - cov) / np.linalg.norm(cov) <= 0.05


def test_same_seed_gives_identical_noise():
    a = GaussianNoise.from_seed(np.diag([1.0, 2.0]), 3, "process").draw_many(100)
    b = GaussianNoise.from_seed(np.diag([1.0, 2.0]), 3, "process").draw_many(100)
    c = GaussianNoise.from_seed(np.diag([1.0, 2.0]), 3, "measurement").draw_many(100)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_stream_rng_labels_are_independent_streams():
    x = stream_rng(1, "process").standard_normal(5)
    y = stream_rng(1, "watermark").standard_normal(5)
    assert not np.allclose(x, y)


@pytest.mark.parametrize("x, expected", [
    ([0, 0, 0, 0], (True, None)),
    ([0.31, 0, 0, 0], (False, "position")),
    ([0, -0.81, 0, 0], (False, "angle")),
    ([0.3, 0.8, 0, 0], (True, None)),
    ([-0.3, -0.8, 5, 5], (True, None)),
])
def test_check_safety(x, expected):
    status = check_safety(PlantState(np.array(x, dtype=float)), nipvss_bounds())
    assert (status.safe, status.component) == expected
    assert bool(status) is expected[0]


def test_safety_limits_must_be_positive():
    with pytest.raises(ConfigurationError):
        SafetyBounds({0: 0.0})


def test_dimension_checks(nipvss):
    with pytest.raises(ConfigurationError):
        PlantModel(np.eye(3), nipvss.B, nipvss.C, nipvss.sigma_w, nipvss.sigma_v)
    with pytest.raises(ConfigurationError):
        PlantModel(nipvss.A, nipvss.B, nipvss.C, nipvss.sigma_w, np.eye(3))
    with pytest.raises(ConfigurationError):
        PlantModel(nipvss.A, nipvss.B, nipvss.C, -np.eye(4), nipvss.sigma_v)
    with pytest.raises(ConfigurationError):
        PlantModel(nipvss.A, nipvss.B, nipvss.C, nipvss.sigma_w, np.array([[1.0, 0.5], [0.0, 1.0]]))
    w, v = zero_noise(nipvss)
    with pytest.raises(ConfigurationError):
        step_plant(nipvss, PlantState(np.zeros(4)), [0.0, 1.0], w, v)
    with pytest.raises(ConfigurationError):
        step_plant(nipvss, PlantState(np.zeros(3)), [0.0], w, v)


def test_non_finite_state_is_numeric_error(nipvss):
    w, v = zero_noise(nipvss)
    with pytest.raises(NumericError):
        step_plant(nipvss, PlantState(np.array([np.inf, 0, 0, 0])), [0.0], w, v)


def test_model_is_immutable(nipvss):
    with pytest.raises(ValueError):
        nipvss.A[0, 0] = 2.0


def test_zoh_model_rounds_to_4_decimal_matrices():
    m = nipvss_model()
    assert np.max(np.abs(m.A - NIPVSS_ROUNDED_A)) < 1e-4
    assert np.max(np.abs(m.B - NIPVSS_ROUNDED_B)) < 1e-4
    rounded = nipvss_model(rounded=True)
    assert np.array_equal(rounded.A, NIPVSS_ROUNDED_A)
    assert np.array_equal(rounded.B, NIPVSS_ROUNDED_B)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(0, 4), st.integers(0, 2**31 - 1))
def test_covariance_factor_reproduces_psd_matrix(n, rank, seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, min(rank, n)))
    cov = G @ G.T
    F = covariance_factor(cov)
    assert np.allclose(F @ F.T, cov, atol=1e-10 * max(1.0, np.abs(cov).max()))
