"""Stochastic stand-ins for the system-environment coupling.

Classical piecewise-constant field trajectories replace the bath: a static
Gaussian dephasing field, an Ornstein-Uhlenbeck dephasing field with exact
discretization, or a static Gaussian field with independent x/y/z components
(general-axis coupling).  Sampling is keyed by (seed, trajectory index)
through counter-based Philox streams, so any trajectory is reproducible
bit-exactly regardless of evaluation order or parallelism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "NoNoise",
    "StaticDephasing",
    "OUDephasing",
    "StaticVector",
    "NoiseTrajectory",
    "sample_trajectory",
    "sample_fields",
    "stream",
]

# Distinct key-space tags so independent draws (noise values, flip-angle
# inhomogeneity, ...) never share a stream for the same (seed, index).
DOMAIN_NOISE = np.uint64(0)
DOMAIN_EPSILON = np.uint64(0x9E3779B97F4A7C15)


@dataclass(frozen=True)
class NoNoise:
    pass


@dataclass(frozen=True)
class StaticDephasing:
    """One Gaussian z-field value per trajectory, constant in time (rad/time)."""

    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


@dataclass(frozen=True)
class OUDephasing:
    """Ornstein-Uhlenbeck z field: std dev sigma, correlation time tau_corr."""

    sigma: float
    tau_corr: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if not self.tau_corr > 0:
            raise ValueError("tau_corr must be positive")


@dataclass(frozen=True)
class StaticVector:
    """Static Gaussian field with independent x, y, z standard deviations."""

    sigma_x: float
    sigma_y: float
    sigma_z: float

    def __post_init__(self):
        if min(self.sigma_x, self.sigma_y, self.sigma_z) < 0:
            raise ValueError("sigmas must be >= 0")


@dataclass(frozen=True)
class NoiseTrajectory:
    """One piecewise-constant sample: segment boundaries and per-segment values.

    ``values`` has shape (n,) for dephasing-only fields (the z component) or
    (n, 3) for vector fields, with n = len(times) - 1.
    """

    times: np.ndarray
    values: np.ndarray

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == 2


def stream(seed: int, index: int, domain=DOMAIN_NOISE) -> np.random.Generator:
    """Deterministic per-trajectory random stream."""
    key = np.array([np.uint64(seed % (1 << 64)) ^ domain, np.uint64(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2:
        raise ValueError("grid must contain at least two boundaries")
    if not np.all(np.diff(grid) > 0):
        raise ValueError("grid must be strictly increasing")
    return grid


def _ou_values(model: OUDephasing, dts: np.ndarray, rng, n_traj: int) -> np.ndarray:
    """Exact OU discretization over (possibly non-uniform) segment lengths."""
    n = len(dts) + 1
    decay = np.exp(-dts / model.tau_corr)
    kick = model.sigma * np.sqrt(1.0 - decay**2)
    out = np.empty((n_traj, n))
    out[:, 0] = model.sigma * rng.standard_normal(n_traj)
    for k in range(len(dts)):
        out[:, k + 1] = out[:, k] * decay[k] + kick[k] * rng.standard_normal(n_traj)
    return out


def sample_trajectory(model, grid, seed: int, index: int) -> NoiseTrajectory:
    """Draw the trajectory for one (seed, index) pair.

    Static variants draw a single value (or 3-vector) applied to every
    segment; the OU variant steps its exact update across the grid with the
    stationary initial distribution, so the marginal variance is sigma^2 at
    every segment.
    """
    grid = _check_grid(grid)
    n = len(grid) - 1
    rng = stream(seed, index)
    if isinstance(model, NoNoise):
        return NoiseTrajectory(grid, np.zeros(n))
    if isinstance(model, StaticDephasing):
        value = model.sigma * rng.standard_normal()
        return NoiseTrajectory(grid, np.full(n, value))
    if isinstance(model, OUDephasing):
        values = _ou_values(model, np.diff(grid), rng, 1)[0, :n]
        return NoiseTrajectory(grid, values)
    if isinstance(model, StaticVector):
        sig = np.array([model.sigma_x, model.sigma_y, model.sigma_z])
        vec = sig * rng.standard_normal(3)
        return NoiseTrajectory(grid, np.tile(vec, (n, 1)))
    raise TypeError(f"unknown noise model {model!r}")


def sample_fields(model, grid, seed: int, n_traj: int) -> np.ndarray:
    """Batched sampling of ``n_traj`` trajectories with indices 0..n_traj-1.

    Row m is bit-identical to ``sample_trajectory(model, grid, seed, m)``.
    Shape (n_traj, n) for dephasing fields, (n_traj, n, 3) for vector fields.
    """
    grid = _check_grid(grid)
    n = len(grid) - 1
    if isinstance(model, NoNoise):
        return np.zeros((n_traj, n))
    if isinstance(model, StaticDephasing):
        vals = np.array(
            [model.sigma * stream(seed, m).standard_normal() for m in range(n_traj)]
        )
        return np.repeat(vals[:, None], n, axis=1)
    if isinstance(model, OUDephasing):
        dts = np.diff(grid)
        out = np.empty((n_traj, n))
        for m in range(n_traj):
            out[m] = _ou_values(model, dts, stream(seed, m), 1)[0, :n]
        return out
    if isinstance(model, StaticVector):
        sig = np.array([model.sigma_x, model.sigma_y, model.sigma_z])
        vecs = np.array([sig * stream(seed, m).standard_normal(3) for m in range(n_traj)])
        return np.repeat(vecs[:, None, :], n, axis=1)
    raise TypeError(f"unknown noise model {model!r}")


def epsilon_draws(base: float, spread: float, seed: int, n_traj: int) -> np.ndarray:
    """Per-trajectory flip-angle errors, Gaussian around ``base``.

    Emulates control-amplitude inhomogeneity across an ensemble; a spread of
    zero returns the constant base value.
    """
    if spread == 0:
        return np.full(n_traj, base)
    return np.array(
        [
            base + spread * stream(seed, m, DOMAIN_EPSILON).standard_normal()
            for m in range(n_traj)
        ]
    )
