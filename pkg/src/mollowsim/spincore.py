"""
Two-level state and propagator algebra.

Everything here works in angular units (rad/s) with the convention

    H = (1/2) (w . sigma),    U(t) = exp(-i (w . sigma) t / 2),

so a generator of magnitude |w| = Omega performs a pi rotation after
t = pi / Omega.  The exponential is evaluated in closed form,

    U = cos(theta/2) I - i sin(theta/2) (n . sigma),   theta = |w| t.

The scalar value types (``SpinState``, ``RotationVector``, ``Unitary2``) are
thin immutable wrappers.  The ``*_batch`` functions operate on stacked numpy
arrays and are what the sequence simulator uses internally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

# renormalise above this drift, refuse above NORM_FAIL
NORM_TOL = 1e-12
NORM_FAIL = 1e-9


class NumericalDriftError(ArithmeticError):
    """A state lost normalisation beyond what round-off can explain."""


@dataclass(frozen=True)
class RotationVector:
    """Generator (wx, wy, wz) in rad/s."""

    wx: float
    wy: float
    wz: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.wx, self.wy, self.wz])):
            raise ValueError(f"non-finite rotation vector {self!r}")

    @property
    def magnitude(self) -> float:
        return float(np.sqrt(self.wx**2 + self.wy**2 + self.wz**2))

    def as_array(self) -> np.ndarray:
        return np.array([self.wx, self.wy, self.wz], dtype=float)


@dataclass(frozen=True)
class Unitary2:
    u00: complex
    u01: complex
    u10: complex
    u11: complex

    @classmethod
    def from_matrix(cls, m) -> "Unitary2":
        m = np.asarray(m, dtype=complex)
        return cls(complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.u00, self.u01], [self.u10, self.u11]], dtype=complex)

    def __matmul__(self, other: "Unitary2") -> "Unitary2":
        return Unitary2.from_matrix(self.matrix @ other.matrix)

    def dagger(self) -> "Unitary2":
        return Unitary2.from_matrix(self.matrix.conj().T)


@dataclass(frozen=True)
class SpinState:
    """Pure qubit state a0|0> + a1|1>."""

    a0: complex
    a1: complex

    def __post_init__(self):
        norm = abs(self.a0) ** 2 + abs(self.a1) ** 2
        if abs(norm - 1.0) > NORM_FAIL:
            raise NumericalDriftError(f"state norm {norm!r} is not 1")

    @classmethod
    def from_vector(cls, v) -> "SpinState":
        v = np.asarray(v, dtype=complex)
        return cls(complex(v[0]), complex(v[1]))

    @classmethod
    def zero(cls) -> "SpinState":
        return cls(1.0 + 0j, 0j)

    @classmethod
    def one(cls) -> "SpinState":
        return cls(0j, 1.0 + 0j)

    @classmethod
    def plus(cls) -> "SpinState":
        r = 1 / np.sqrt(2)
        return cls(complex(r), complex(r))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.a0, self.a1], dtype=complex)


def propagator_batch(w, t) -> np.ndarray:
    """Closed-form exp(-i (w.sigma) t / 2) for stacked generators.

    Parameters
    ----------
    w : array_like, shape (..., 3)
        Generators in rad/s.
    t : array_like, broadcastable to ``w.shape[:-1]``
        Durations in seconds.

    Returns
    -------
    ndarray, shape (..., 2, 2)
    """
    w = np.asarray(w, dtype=float)
    t = np.asarray(t, dtype=float)
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(t))):
        raise ValueError("non-finite generator or duration")
    if np.any(t < 0):
        raise ValueError("negative duration")
    mag = np.sqrt(np.sum(w * w, axis=-1))
    theta = mag * t
    c = np.cos(theta / 2)
    # sin(theta/2)/|w| with the |w| -> 0 limit handled explicitly
    safe = np.where(mag > 0, mag, 1.0)
    s = np.where(mag > 0, np.sin(theta / 2) / safe, 0.0)
    nx, ny, nz = w[..., 0] * s, w[..., 1] * s, w[..., 2] * s
    shape = np.broadcast(c, nx).shape
    u = np.empty(shape + (2, 2), dtype=complex)
    u[..., 0, 0] = c - 1j * nz
    u[..., 0, 1] = -1j * nx - ny
    u[..., 1, 0] = -1j * nx + ny
    u[..., 1, 1] = c + 1j * nz
    return u


def rotation_batch(angle, axis_phase) -> np.ndarray:
    """Instantaneous rotation by ``angle`` about the in-plane axis at ``axis_phase``."""
    angle = np.asarray(angle, dtype=float)
    axis_phase = np.asarray(axis_phase, dtype=float)
    w = np.stack(np.broadcast_arrays(np.cos(axis_phase), np.sin(axis_phase), np.zeros_like(axis_phase)), axis=-1)
    return propagator_batch(w, np.broadcast_to(angle, w.shape[:-1]))


def apply_batch(u: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Apply stacked unitaries to stacked states and police the norm."""
    out = np.einsum("...ij,...j->...i", u, psi)
    norm = np.sum(np.abs(out) ** 2, axis=-1)
    drift = np.max(np.abs(norm - 1.0)) if norm.size else 0.0
    if drift > NORM_FAIL:
        raise NumericalDriftError(f"norm drift {drift:.3e} after propagation")
    if drift > NORM_TOL:
        out = out / np.sqrt(norm)[..., None]
    return out


def propagator(w: RotationVector, t: float) -> Unitary2:
    if not np.isfinite(t):
        raise ValueError("non-finite duration")
    if t < 0:
        raise ValueError(f"duration must be >= 0, got {t}")
    return Unitary2.from_matrix(propagator_batch(w.as_array(), t))


def apply(u: Unitary2, s: SpinState) -> SpinState:
    return SpinState.from_vector(apply_batch(u.matrix, s.vector))


def readout_p0(s: SpinState) -> float:
    """Population of |0>."""
    return float(abs(s.a0) ** 2)


def p0_batch(psi: np.ndarray) -> np.ndarray:
    return np.abs(psi[..., 0]) ** 2


def bloch_vector(psi) -> np.ndarray:
    """(<sx>, <sy>, <sz>) for a state vector or a stack of them."""
    psi = np.asarray(psi.vector if isinstance(psi, SpinState) else psi, dtype=complex)
    a0, a1 = psi[..., 0], psi[..., 1]
    cross = np.conj(a0) * a1
    return np.stack([2 * cross.real, 2 * cross.imag, np.abs(a0) ** 2 - np.abs(a1) ** 2], axis=-1)
