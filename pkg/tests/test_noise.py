import numpy as np
import pytest

from ddsim.noise import (
    NoNoise,
    OUDephasing,
    StaticDephasing,
    StaticVector,
    epsilon_draws,
    sample_fields,
    sample_trajectory,
)

GRID = np.linspace(0.0, 10.0, 11)


def test_none_noise_is_zero():
    traj = sample_trajectory(NoNoise(), GRID, 1, 0)
    assert np.all(traj.values == 0.0)


def test_static_is_constant_and_deterministic():
    a = sample_trajectory(StaticDephasing(0.7), GRID, 42, 3)
    b = sample_trajectory(StaticDephasing(0.7), GRID, 42, 3)
    assert np.array_equal(a.values, b.values)
    assert np.all(a.values == a.values[0])
    c = sample_trajectory(StaticDephasing(0.7), GRID, 42, 4)
    assert a.values[0] != c.values[0]


def test_batched_rows_match_single_trajectories():
    for model in (StaticDephasing(0.5), OUDephasing(0.5, 3.0), StaticVector(0.1, 0.2, 0.3)):
        fields = sample_fields(model, GRID, 7, 5)
        for m in range(5):
            single = sample_trajectory(model, GRID, 7, m)
            assert np.array_equal(fields[m], single.values)


def test_rejects_non_increasing_grid():
    with pytest.raises(ValueError):
        sample_trajectory(StaticDephasing(1.0), [0.0, 1.0, 1.0], 0, 0)
    with pytest.raises(ValueError):
        sample_trajectory(StaticDephasing(1.0), [0.0], 0, 0)


def test_static_moments():
    sigma = 0.8
    vals = sample_fields(StaticDephasing(sigma), GRID, 11, 20000)[:, 0]
    assert abs(np.mean(vals)) < 5 * sigma / np.sqrt(20000)
    assert abs(np.std(vals) - sigma) < 5 * sigma / np.sqrt(20000)


def test_ou_autocovariance_matches_analytic():
    # uniform grid; exact discretization should reproduce sigma^2 e^(-lag/tau)
    sigma, tau_corr, dt, n_traj = 0.9, 4.0, 0.5, 100_000
    grid = np.arange(0.0, 16.0 + dt / 2, dt)
    x = sample_fields(OUDephasing(sigma, tau_corr), grid, 123, n_traj)
    k0 = 6
    for lag in (0, 1, 2, 4, 8):
        prod = x[:, k0] * x[:, k0 + lag]
        estimate = prod.mean()
        stderr = prod.std(ddof=1) / np.sqrt(n_traj)
        expected = sigma**2 * np.exp(-lag * dt / tau_corr)
        assert abs(estimate - expected) < 5 * stderr, (lag, estimate, expected, stderr)


def test_ou_stationary_variance():
    sigma, n_traj = 0.6, 50_000
    x = sample_fields(OUDephasing(sigma, 2.0), np.linspace(0, 20, 21), 9, n_traj)
    for k in (0, 10, 19):
        sq = x[:, k] ** 2
        stderr = sq.std(ddof=1) / np.sqrt(n_traj)
        assert abs(sq.mean() - sigma**2) < 5 * stderr


def test_static_vector_degenerates_to_dephasing():
    fields = sample_fields(StaticVector(0.0, 0.0, 0.9), GRID, 5, 5000)
    assert np.all(fields[..., 0] == 0.0) and np.all(fields[..., 1] == 0.0)
    z = fields[:, 0, 2]
    assert abs(np.std(z) - 0.9) < 5 * 0.9 / np.sqrt(5000)
    # constant over the grid
    assert np.all(fields[:, :, 2] == fields[:, :1, 2])


def test_model_validation():
    with pytest.raises(ValueError):
        StaticDephasing(-1.0)
    with pytest.raises(ValueError):
        OUDephasing(1.0, 0.0)
    with pytest.raises(ValueError):
        StaticVector(-0.1, 0.0, 0.0)


def test_epsilon_draws_deterministic_and_decorrelated():
    a = epsilon_draws(0.01, 0.05, 3, 100)
    b = epsilon_draws(0.01, 0.05, 3, 100)
    assert np.array_equal(a, b)
    assert np.all(epsilon_draws(0.02, 0.0, 3, 10) == 0.02)
    # epsilon stream must differ from the noise stream for the same key
    noise = sample_fields(StaticDephasing(0.05), GRID, 3, 100)[:, 0]
    eps = epsilon_draws(0.0, 0.05, 3, 100)
    assert abs(np.corrcoef(noise, eps)[0, 1]) < 0.2
