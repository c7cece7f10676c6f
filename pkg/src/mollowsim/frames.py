"""
Rotating-frame generators for the weak signal and the strong drive.

The simulation frame co-rotates with the weak signal.  In it the signal is a
static field and the qubit precesses at ``delta_rf = omega_0 - omega_rf``.
The drive axis turns at ``omega_dd - omega_rf = -delta_rf_dd``, so that a
drive sitting on the qubit line co-rotates with the free precession of the
spin.  For short drive pulses the drive phase is frozen at the instant the
pulse starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .spincore import RotationVector


@dataclass(frozen=True)
class FrameConfig:
    """Detunings (rad/s) that define the signal frame.

    Attributes
    ----------
    delta_rf : float
        Qubit minus signal frequency, ``omega_0 - omega_rf``.
    delta_rf_dd : float
        Signal minus drive frequency, ``omega_rf - omega_dd``.
    """

    delta_rf: float
    delta_rf_dd: float

    @classmethod
    def resonant_drive(cls, delta_rf: float) -> "FrameConfig":
        """Drive sitting exactly on the qubit line (omega_dd = omega_0)."""
        return cls(delta_rf=float(delta_rf), delta_rf_dd=-float(delta_rf))

    @classmethod
    def from_frequencies(cls, omega_0: float, omega_rf: float, omega_dd: float) -> "FrameConfig":
        return cls(delta_rf=omega_0 - omega_rf, delta_rf_dd=omega_rf - omega_dd)

    @property
    def qubit_drive_detuning(self) -> float:
        """``omega_0 - omega_dd``; zero for a resonant drive."""
        return self.delta_rf + self.delta_rf_dd

    def shifted_qubit(self, delta: float) -> "FrameConfig":
        """Same fields, qubit frequency moved by ``delta``."""
        return FrameConfig(self.delta_rf + delta, self.delta_rf_dd)


def signal_generator(frame: FrameConfig, omega_rf: float, phi_rf: float) -> RotationVector:
    if omega_rf < 0:
        raise ValueError("signal Rabi frequency must be non-negative")
    return RotationVector(omega_rf * math.cos(phi_rf), omega_rf * math.sin(phi_rf), frame.delta_rf)


def drive_axis_phase(frame: FrameConfig, phi_dd: float, t_start: float) -> float:
    """In-plane angle of the drive axis at ``t_start`` (not wrapped)."""
    return phi_dd - frame.delta_rf_dd * t_start


def drive_generator(frame: FrameConfig, omega_dd: float, phi_dd: float, t_start: float) -> RotationVector:
    """Drive generator with the carrier phase frozen at ``t_start``.

    The z-component is the qubit-signal detuning, because the frame is the
    signal's and not the drive's.
    """
    if omega_dd <= 0:
        raise ValueError("drive Rabi frequency must be positive")
    if t_start < 0:
        raise ValueError("pulse start time must be non-negative")
    a = drive_axis_phase(frame, phi_dd, t_start)
    return RotationVector(omega_dd * math.cos(a), omega_dd * math.sin(a), frame.delta_rf)
