import math

import numpy as np
import pytest

from ddsim.su2 import (
    IDENTITY,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    bloch_state,
    check_density_matrix,
    effective_generator,
    expectations,
    is_unitary,
    pauli_decompose,
    pauli_reconstruct,
    rotation,
)


def expm_series(a: np.ndarray, order: int = 20) -> np.ndarray:
    """Truncated matrix-exponential series, the independent oracle."""
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, order + 1):
        term = term @ a / k
        out = out + term
    return out


def rotation_oracle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    h = axis[0] * SIGMA_X + axis[1] * SIGMA_Y + axis[2] * SIGMA_Z
    return expm_series(-0.5j * angle * h)


def test_rotation_x_pi_is_minus_i_sigma_x():
    assert np.allclose(rotation((1, 0, 0), math.pi), -1j * SIGMA_X, atol=1e-15)


def test_rotation_z_2pi_is_minus_identity():
    assert np.allclose(rotation((0, 0, 1), 2 * math.pi), -IDENTITY, atol=1e-15)


def test_rotation_y_half_pi_matches_series_oracle():
    got = rotation((0, 1, 0), math.pi / 2)
    expected = rotation_oracle((0, 1, 0), math.pi / 2)
    assert np.max(np.abs(got - expected)) < 1e-12
    assert np.allclose(got, (IDENTITY - 1j * SIGMA_Y) / math.sqrt(2), atol=1e-12)


def test_rotation_random_axes_match_series_oracle():
    rng = np.random.default_rng(7)
    for _ in range(50):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        # order-20 series is exact to machine precision only for |angle| <= pi
        angle = rng.uniform(-math.pi, math.pi)
        got = rotation(axis, angle)
        assert np.max(np.abs(got - rotation_oracle(axis, angle))) < 1e-12
        assert is_unitary(got)
        assert abs(np.linalg.det(got) - 1.0) < 1e-12


def test_rotation_rejects_non_unit_axis():
    with pytest.raises(ValueError):
        rotation((1, 1, 0), math.pi)


def test_rotation_broadcasts():
    axes = np.array([[1.0, 0, 0], [0, 1.0, 0]])
    angles = np.array([math.pi, math.pi / 2])
    out = rotation(axes, angles)
    assert out.shape == (2, 2, 2)
    assert np.allclose(out[0], rotation((1, 0, 0), math.pi))
    assert np.allclose(out[1], rotation((0, 1, 0), math.pi / 2))


def test_composition_same_axis_adds_angles():
    rng = np.random.default_rng(21)
    for _ in range(200):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        a, b = rng.uniform(-2 * math.pi, 2 * math.pi, 2)
        lhs = rotation(axis, a) @ rotation(axis, b)
        assert np.max(np.abs(lhs - rotation(axis, a + b))) < 1e-12


def test_pauli_decompose_basics():
    assert np.allclose(pauli_decompose(IDENTITY), [1, 0, 0, 0], atol=1e-15)
    assert np.allclose(pauli_decompose(SIGMA_X), [0, 1, 0, 0], atol=1e-15)
    theta = 0.83
    got = pauli_decompose(rotation((1, 0, 0), theta))
    expected = [math.cos(theta / 2), -1j * math.sin(theta / 2), 0, 0]
    assert np.allclose(got, expected, atol=1e-14)


def test_pauli_roundtrip_random_operators():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        op = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        back = pauli_reconstruct(pauli_decompose(op))
        assert np.max(np.abs(back - op)) < 1e-12


def test_effective_generator_identity():
    axis, rate = effective_generator(IDENTITY, 1.0)
    assert rate == 0.0
    assert np.allclose(axis, [0, 0, 1])
    axis, rate = effective_generator(-IDENTITY, 1.0)
    assert rate == 0.0


def test_effective_generator_inverts_rotation():
    axis, rate = effective_generator(rotation((1, 0, 0), 0.2), 2.0)
    assert np.allclose(axis, [1, 0, 0], atol=1e-12)
    assert abs(rate - 0.1) < 1e-12


def test_effective_generator_principal_branch_fold():
    axis, rate = effective_generator(rotation((0, 0, 1), 3 * math.pi / 2), 1.0)
    assert np.allclose(axis, [0, 0, -1], atol=1e-12)
    assert abs(rate - math.pi / 2) < 1e-12


def test_effective_generator_left_inverse_of_rotation():
    rng = np.random.default_rng(11)
    for _ in range(100):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        duration = rng.uniform(0.1, 5.0)
        rate = rng.uniform(1e-6, math.pi / duration * 0.999)
        sign = rng.choice([-1.0, 1.0])
        got_axis, got_rate = effective_generator(sign * rotation(axis, rate * duration), duration)
        assert abs(got_rate - rate) < 1e-9
        assert np.max(np.abs(got_axis - axis)) < 1e-8


def test_effective_generator_rejects_bad_input():
    with pytest.raises(ValueError):
        effective_generator(IDENTITY, 0.0)
    with pytest.raises(ValueError):
        effective_generator(np.array([[1.0, 1.0], [0.0, 1.0]]), 1.0)


def test_bloch_state_and_expectations():
    rho = bloch_state("x")
    check_density_matrix(rho)
    assert np.allclose(expectations(rho), [1, 0, 0], atol=1e-15)
    rho = bloch_state((0, 0, -1))
    assert np.allclose(expectations(rho), [0, 0, -1], atol=1e-15)
    with pytest.raises(ValueError):
        bloch_state("q")
    with pytest.raises(ValueError):
        bloch_state((1, 1, 0))


def test_check_density_matrix_rejects_bad():
    with pytest.raises(ValueError):
        check_density_matrix(np.array([[0.5, 0.5], [0.2, 0.5]]))
    with pytest.raises(ValueError):
        check_density_matrix(np.array([[0.9, 0.0], [0.0, 0.9]]))
    with pytest.raises(ValueError):
        check_density_matrix(np.array([[1.5, 0.0], [0.0, -0.5]]))
