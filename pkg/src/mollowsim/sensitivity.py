"""
Linear-response model of a pulsed Mollow sequence.

For a weak signal the readout <sigma_z> is linear in the signal quadrature
orthogonal to the drive,

    rotation = integral g(t) * Omega_y(t) dt,    Omega_y(t) = Omega_rf sin(Delta t + phi0),

where g(t) = +-1 flips at every X-type pi pulse and keeps its sign across
Y-type pulses.  All integrals are done in closed form per interval.  Here
Delta = omega_rf - omega_0 is the signal's offset from the qubit line and
phi0 is the signal phase at the start of the body, so in the simulator's
signal frame delta_rf = -Delta and the static signal phase equals phi0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .sequences import PulseSequence, SequenceError, sign_pattern


@dataclass(frozen=True)
class SensitivityFunction:
    """Piecewise-constant +-1 weight over the sequence body.

    ``breakpoints`` has one more entry than ``values``; every pulse centre is a
    breakpoint, including Y pulses where the sign does not change, so the
    intervals line up with the signal windows.  ``phase_offsets`` carries the
    signal phase program (one offset per interval).
    """

    breakpoints: tuple
    values: tuple
    phase_offsets: tuple = ()

    def __post_init__(self):
        if len(self.breakpoints) != len(self.values) + 1:
            raise ValueError("need one more breakpoint than values")
        if np.any(np.diff(self.breakpoints) < 0):
            raise ValueError("breakpoints must be ordered")
        if not self.phase_offsets:
            object.__setattr__(self, "phase_offsets", (0.0,) * len(self.values))
        elif len(self.phase_offsets) != len(self.values):
            raise ValueError("one phase offset per interval")

    @property
    def duration(self) -> float:
        return self.breakpoints[-1] - self.breakpoints[0]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.breakpoints, t, side="right") - 1, 0, len(self.values) - 1)
        return np.asarray(self.values)[idx]

    def flip_times(self) -> list:
        """Breakpoints where the sign actually changes."""
        return [self.breakpoints[k + 1] for k in range(len(self.values) - 1)
                if self.values[k + 1] != self.values[k]]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_s", "g"])
            for t, v in zip(self.breakpoints, self.values):
                w.writerow([repr(float(t)), v])
            w.writerow([repr(float(self.breakpoints[-1])), self.values[-1]])


def sensitivity_of(seq: PulseSequence) -> SensitivityFunction:
    """Build g(t) from the body of a pulse program (ideal pulse-centre timing)."""
    if seq.cw_signal is not None:
        raise SequenceError("the sensitivity model applies to pulsed programs only")
    axes = seq.axes
    for a in axes:
        if a not in ("X", "Y", "-X", "-Y"):
            raise SequenceError(f"drive pulse with unusable label {a!r}")
    centers = seq.pulse_centers()
    T = seq.body_duration
    values = sign_pattern(axes)
    program = seq.signal_phase_program
    if len(program) != len(values):
        program = [0.0] * len(values)
    return SensitivityFunction(tuple([0.0] + centers + [T]), tuple(values), tuple(program))


def response_quadratures(g: SensitivityFunction, omega_rf: float, delta):
    """Coefficients (a, b) with response(phi0) = a sin(phi0) + b cos(phi0).

    ``delta`` may be an array.
    """
    delta = np.asarray(delta, dtype=float)[..., None]
    t = np.asarray(g.breakpoints, dtype=float)
    w = np.diff(t)
    mid = 0.5 * (t[1:] + t[:-1])
    v = np.asarray(g.values, dtype=float)
    off = np.asarray(g.phase_offsets, dtype=float)
    # integral of sin(delta t + psi) over an interval = w sinc(delta w / 2) sin(delta mid + psi)
    weight = v * w * np.sinc(delta * w / (2 * np.pi))
    phase = delta * mid + off
    a = omega_rf * np.sum(weight * np.cos(phase), axis=-1)
    b = omega_rf * np.sum(weight * np.sin(phase), axis=-1)
    return a, b


def predict_response(g: SensitivityFunction, omega_rf: float, delta, phi0: float):
    """Accumulated rotation angle, integral of g(t) Omega_rf sin(delta t + phi0)."""
    a, b = response_quadratures(g, omega_rf, delta)
    return a * math.sin(phi0) + b * math.cos(phi0)


def optimal_phase(g: SensitivityFunction, delta: float) -> float:
    """Signal phase phi0 that maximises the response."""
    a, b = response_quadratures(g, 1.0, delta)
    return float(np.arctan2(a, b))


def null_phase(g: SensitivityFunction, delta: float) -> float:
    """Signal phase in the insensitive quadrature (first-order response zero)."""
    a, b = response_quadratures(g, 1.0, delta)
    return float(np.arctan2(-b, a))


def effective_rabi_factor(seq: PulseSequence, delta, g: Optional[SensitivityFunction] = None):
    """Best-phase response per unit signal area, in [0, 1]."""
    g = sensitivity_of(seq) if g is None else g
    a, b = response_quadratures(g, 1.0, delta)
    return np.hypot(a, b) / g.duration


def readout_sign(seq: PulseSequence) -> int:
    """Sign relating the rotation angle to the final <sigma_z>.

    The (pi/2)_Y preparation puts the spin on +x and a positive rotation about
    +y tips it towards -z; every pi pulse in the body inverts z once more.
    """
    return -1 if len(seq.drive_pulses) % 2 == 0 else 1


def predicted_sz(seq: PulseSequence, omega_rf: float, delta, phi0: float, g: Optional[SensitivityFunction] = None):
    """Small-signal prediction of the final <sigma_z> (i.e. the differential readout)."""
    g = sensitivity_of(seq) if g is None else g
    return readout_sign(seq) * np.sin(predict_response(g, omega_rf, delta, phi0))
