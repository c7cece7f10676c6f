import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mollowsim.spincore import (
    NumericalDriftError, RotationVector, SpinState, apply, apply_batch, bloch_vector, propagator,
    propagator_batch, readout_p0, rotation_batch,
)
from oracles import expm_propagator, rabi_p1

finite = st.floats(-1e8, 1e8, allow_nan=False)


def test_detuned_rabi_grid_matches_closed_form():
    omega = np.linspace(1e5, 1e8, 10)
    delta = np.linspace(-5e7, 5e7, 10)
    t = np.linspace(0, 2e-6, 10)
    O, D, T = np.meshgrid(omega, delta, t, indexing="ij")
    w = np.stack([O, np.zeros_like(O), D], axis=-1)
    u = propagator_batch(w, T)
    p1 = np.abs(u[..., 1, 0]) ** 2
    assert np.max(np.abs(p1 - rabi_p1(O, D, T))) < 1e-10


def test_matches_matrix_exponential():
    rng = np.random.default_rng(3)
    for _ in range(50):
        w = rng.normal(size=3) * 1e7
        t = rng.uniform(0, 1e-6)
        assert np.allclose(propagator_batch(w, t), expm_propagator(w, t), atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(finite, finite, finite, st.floats(0, 1e-3))
def test_unitarity(wx, wy, wz, t):
    u = propagator_batch([wx, wy, wz], t)
    assert np.max(np.abs(u.conj().T @ u - np.eye(2))) < 1e-12


def test_pi_rotation_about_x_flips():
    psi = apply_batch(rotation_batch(math.pi, 0.0), np.array([1, 0], complex))
    assert abs(psi[1]) ** 2 == pytest.approx(1.0, abs=1e-15)


def test_composition_of_collinear_rotations():
    w = np.array([3e6, -1e6, 2e6])
    assert np.allclose(propagator_batch(w, 2e-7) @ propagator_batch(w, 3e-7), propagator_batch(w, 5e-7), atol=1e-13)


def test_zero_generator_is_identity():
    assert np.array_equal(propagator_batch([0.0, 0.0, 0.0], 1.0), np.eye(2, dtype=complex))


def test_pi_half_about_y_gives_plus_x():
    s = apply(propagator(RotationVector(0.0, 1.0, 0.0), math.pi / 2),
              SpinState.zero())
    assert np.allclose(bloch_vector(s), [1, 0, 0], atol=1e-15)
    assert readout_p0(s) == pytest.approx(0.5)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        propagator_batch([1.0, 0.0, 0.0], -1.0)
    with pytest.raises(ValueError):
        propagator_batch([np.nan, 0.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        RotationVector(np.inf, 0, 0)
    with pytest.raises(NumericalDriftError):
        SpinState(1.0, 0.1)


def test_norm_drift_is_refused():
    with pytest.raises(NumericalDriftError):
        apply_batch(2 * np.eye(2, dtype=complex), np.array([1, 0], complex))


def test_batch_shapes_broadcast():
    u = rotation_batch(math.pi, np.zeros((4, 3)))
    assert u.shape == (4, 3, 2, 2)
