"""Exact 2x2 operator algebra: Pauli matrices, analytic SU(2) rotations,
density matrices and principal-branch generator extraction.

All operators are plain complex numpy arrays of shape (..., 2, 2); the
rotation constructors broadcast over leading axes so the simulation engine
can build whole ensembles of propagators in one call.  Global phase is never
tracked: comparisons of unitaries go through phase-invariant overlaps.
"""

from __future__ import annotations

import math

import numpy as np

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

#: Pauli basis (I, sx, sy, sz), orthogonal under Tr(A B)/2.
PAULI_BASIS = np.stack([IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z])

_AXIS_LABELS = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}


def rotation(axis, angle) -> np.ndarray:
    """Rotation about a unit axis: cos(a/2) I - i sin(a/2) (axis . sigma).

    Parameters
    ----------
    axis : array_like, shape (..., 3)
        Unit rotation axis (or axes); norm must be 1 within 1e-9.
    angle : array_like, shape (...)
        Rotation angle(s) in radians.

    Returns
    -------
    np.ndarray, shape (..., 2, 2)
        Unitary rotation operator(s) with determinant 1.
    """
    axis = np.asarray(axis, dtype=float)
    angle = np.asarray(angle, dtype=float)
    norms = np.linalg.norm(axis, axis=-1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise ValueError("rotation axis must be a unit vector (|axis| = 1 within 1e-9)")
    return _rotation_unchecked(axis, angle)


def _rotation_unchecked(axis, angle) -> np.ndarray:
    """rotation() without the unit-norm check, for internally normalized axes."""
    axis = np.asarray(axis, dtype=float)
    half = np.asarray(angle, dtype=float) / 2.0
    c = np.cos(half)
    s = np.sin(half)
    nx, ny, nz = axis[..., 0], axis[..., 1], axis[..., 2]
    out = np.empty(np.broadcast(c, nx).shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c - 1j * s * nz
    out[..., 0, 1] = -1j * s * nx - s * ny
    out[..., 1, 0] = -1j * s * nx + s * ny
    out[..., 1, 1] = c + 1j * s * nz
    return out


def rotation_xy(phase: float, angle: float) -> np.ndarray:
    """Rotation about the in-plane axis (cos(phase), sin(phase), 0)."""
    return _rotation_unchecked(
        np.array([math.cos(phase), math.sin(phase), 0.0]), angle
    )


def pauli_decompose(op: np.ndarray) -> np.ndarray:
    """Coefficients (c_I, c_x, c_y, c_z) of ``op`` in the Pauli basis.

    c_k = Tr(sigma_k op) / 2, so ``pauli_reconstruct(pauli_decompose(op))``
    reproduces ``op`` exactly.
    """
    op = np.asarray(op, dtype=complex)
    return np.einsum("kab,...ba->...k", PAULI_BASIS, op) / 2.0


def pauli_reconstruct(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pauli_decompose`."""
    coeffs = np.asarray(coeffs, dtype=complex)
    return np.einsum("...k,kab->...ab", coeffs, PAULI_BASIS)


def is_unitary(op: np.ndarray, tol: float = 1e-12) -> bool:
    """True when op . op^dagger = I entrywise within ``tol``."""
    op = np.asarray(op)
    prod = op @ op.conj().swapaxes(-1, -2)
    return bool(np.all(np.abs(prod - IDENTITY) <= tol))


def effective_generator(op: np.ndarray, duration: float) -> tuple[np.ndarray, float]:
    """Axis and rate of the constant generator reproducing a unitary.

    Finds a unit axis ``n`` and rate ``w`` in [0, pi/duration] such that
    ``op = rotation(n, w * duration)`` up to a global phase.  The rotation
    angle is folded into the principal branch [0, pi], flipping the axis as
    needed, which makes the extraction unique.

    Operators within 1e-12 of a multiple of the identity return rate 0 and
    the fixed axis (0, 0, 1).
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    op = np.asarray(op, dtype=complex)
    if not is_unitary(op, tol=1e-9):
        raise ValueError("effective_generator requires a unitary operator")
    c = pauli_decompose(op)
    # Quaternion components up to a common complex phase: (cos(t/2), sin(t/2) n).
    quat = np.array([c[0], 1j * c[1], 1j * c[2], 1j * c[3]])
    ref = quat[np.argmax(np.abs(quat))]
    quat = (quat * np.exp(-1j * np.angle(ref))).real
    if quat[0] < 0:
        quat = -quat
    vec = quat[1:]
    s = np.linalg.norm(vec)
    if s <= 1e-12:
        return np.array([0.0, 0.0, 1.0]), 0.0
    theta = 2.0 * math.atan2(s, quat[0])
    axis = vec / s
    if quat[0] <= 1e-15:
        # theta = pi: rotation(n, pi) = -rotation(-n, pi); pick a canonical sign.
        lead = np.argmax(np.abs(axis))
        if axis[lead] < 0:
            axis = -axis
    return axis, theta / duration


def bloch_state(axis) -> np.ndarray:
    """Density matrix (I + n . sigma) / 2 for a unit Bloch vector.

    ``axis`` may be a 3-vector or one of the labels 'x', 'y', 'z'.
    """
    if isinstance(axis, str):
        try:
            axis = _AXIS_LABELS[axis]
        except KeyError:
            raise ValueError(f"unknown Bloch axis label {axis!r}") from None
    n = np.asarray(axis, dtype=float)
    if abs(np.linalg.norm(n) - 1.0) > 1e-9:
        raise ValueError("Bloch vector must have unit norm")
    return (IDENTITY + n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z) / 2.0


def expectations(rho: np.ndarray) -> np.ndarray:
    """Bloch components (<sx>, <sy>, <sz>) of a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    return np.einsum("kab,...ba->...k", PAULI_BASIS[1:], rho).real


def check_density_matrix(rho: np.ndarray, tol: float = 1e-12) -> None:
    """Raise ValueError unless rho is Hermitian, unit trace and PSD."""
    rho = np.asarray(rho, dtype=complex)
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError("density matrix trace differs from 1")
    if np.min(np.linalg.eigvalsh(rho)) < -1e-10:
        raise ValueError("density matrix has a negative eigenvalue")
