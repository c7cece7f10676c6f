"""
Time-domain propagation of a pulse program in the signal frame.

Every segment contributes one closed-form propagator: signal windows evolve
under the static signal field plus the qubit detuning, finite drive pulses
under the drive field with its phase frozen at the pulse start, and ideal
drive pulses are instantaneous rotations about the drive axis at the pulse
centre.  A CW program (signal concurrent with the drive) is time-sliced with
the drive phase advanced continuously.

The drive axis turns at ``-delta_rf_dd`` in this frame.  With
``pulse_model="exact"`` finite pulses are instead propagated exactly by going
through the drive frame, where the pulse Hamiltonian is static.

All functions accept detunings as arrays and propagate the whole batch in one
pass; the batch shape is ``np.broadcast(delta_rf, delta_rf_dd).shape``.
"""

from __future__ import annotations

import math

import numpy as np

from .frames import FrameConfig
from .sequences import DRIVE, IDLE, SIGNAL, PulseSequence
from .spincore import SpinState, apply_batch, p0_batch, propagator_batch, rotation_batch

# CW slices per shortest period (drive Rabi period or drive-axis precession period)
CW_OVERSAMPLE = 50
PULSE_MODELS = ("frozen", "exact")


def _field(amplitude: float, phase, delta_rf):
    amp_x = amplitude * np.cos(phase)
    amp_y = amplitude * np.sin(phase)
    return np.stack(np.broadcast_arrays(amp_x, amp_y, delta_rf), axis=-1)


def cw_slice_count(duration: float, omega_dd: float, delta_rf_dd, oversample: int = CW_OVERSAMPLE) -> int:
    fastest = max(float(np.max(np.abs(delta_rf_dd))), omega_dd)
    dt_max = 2 * math.pi / fastest / oversample
    return max(1, math.ceil(duration / dt_max))


def _axis(phase, delta_rf_dd, t):
    return phase - delta_rf_dd * t


def _z_turn(rate, t):
    return propagator_batch(_field(0.0, 0.0, rate), t)


def _exact_pulse(seg, t0, delta_rf, delta_rf_dd):
    # signal frame = drive frame rotated by exp(+i delta_rf_dd t sz / 2)
    u_d = propagator_batch(_field(seg.amplitude, seg.phase, delta_rf + delta_rf_dd), seg.duration)
    t1 = t0 + seg.duration
    # V(t) = exp(+i delta_rf_dd t sz / 2), so V(t0)^dagger turns at +delta_rf_dd
    v1 = _z_turn(-delta_rf_dd, t1)
    v0_dag = _z_turn(delta_rf_dd, t0)
    return v1 @ u_d @ v0_dag


def evolve(seq: PulseSequence, delta_rf, delta_rf_dd, *, cw_oversample: int = CW_OVERSAMPLE,
           pulse_model: str = "frozen") -> np.ndarray:
    """Final state vectors for a batch of frames, starting from |0>.

    Parameters
    ----------
    seq : PulseSequence
    delta_rf, delta_rf_dd : array_like
        Frame detunings in rad/s, broadcast against each other.
    pulse_model : {"frozen", "exact"}
        Treatment of finite drive pulses; ignored for ideal programs.

    Returns
    -------
    ndarray, shape (*batch, 2)
    """
    if pulse_model not in PULSE_MODELS:
        raise ValueError(f"pulse_model must be one of {PULSE_MODELS}")
    delta_rf, delta_rf_dd = np.broadcast_arrays(np.asarray(delta_rf, float), np.asarray(delta_rf_dd, float))
    batch = delta_rf.shape
    psi = np.zeros(batch + (2,), dtype=complex)
    psi[..., 0] = 1.0

    for ts in seq.timeline():
        s = ts.segment
        if s.kind == SIGNAL:
            u = propagator_batch(_field(s.amplitude, s.phase, delta_rf), s.duration)
        elif s.kind == IDLE:
            u = propagator_batch(_field(0.0, 0.0, delta_rf), s.duration)
        elif s.kind == DRIVE:
            if seq.mode == "ideal" and not (seq.cw_signal is not None and ts.role == "body"):
                u = rotation_batch(s.area, _axis(s.phase, delta_rf_dd, ts.start))
            elif seq.cw_signal is not None and ts.role == "body":
                psi = _evolve_cw(psi, s, ts.start, seq.cw_signal, delta_rf, delta_rf_dd, cw_oversample)
                continue
            elif pulse_model == "exact":
                u = _exact_pulse(s, ts.start, delta_rf, delta_rf_dd)
            else:
                u = propagator_batch(_field(s.amplitude, _axis(s.phase, delta_rf_dd, ts.start), delta_rf), s.duration)
        else:
            raise ValueError(f"unknown segment kind {s.kind!r}")
        psi = apply_batch(u, psi)

    if seq.readout_flip:
        # ideal pi pulse about a fixed in-plane axis: swaps |0> and |1> populations exactly
        psi = apply_batch(rotation_batch(math.pi, 0.0), psi)
    return psi


def _evolve_cw(psi, seg, t0, cw_signal, delta_rf, delta_rf_dd, oversample):
    omega_rf, phi_rf = cw_signal
    n = cw_slice_count(seg.duration, seg.amplitude, delta_rf_dd, oversample)
    dt = seg.duration / n
    sig = np.array([omega_rf * math.cos(phi_rf), omega_rf * math.sin(phi_rf), 0.0])
    for k in range(n):
        t_mid = t0 + (k + 0.5) * dt
        w = _field(seg.amplitude, _axis(seg.phase, delta_rf_dd, t_mid), delta_rf) + sig
        psi = apply_batch(propagator_batch(w, dt), psi)
    return psi


def final_state(seq: PulseSequence, frame: FrameConfig, **kw) -> SpinState:
    return SpinState.from_vector(evolve(seq, frame.delta_rf, frame.delta_rf_dd, **kw))


def simulate_p0(seq: PulseSequence, delta_rf, delta_rf_dd, **kw) -> np.ndarray:
    return p0_batch(evolve(seq, delta_rf, delta_rf_dd, **kw))
