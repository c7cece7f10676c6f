"""
Quasi-static inhomogeneous broadening.

The qubit frequency is scattered as omega_0 -> omega_0 + delta with
delta ~ N(0, (2 pi sigma_f)^2) and every readout is averaged over that
distribution.  The average is a Gauss-Hermite quadrature (deterministic, and
exact for polynomials up to degree 2 * nodes - 1); Monte-Carlo averaging lives
in the test-suite as an oracle only.

Two mappings between T2* and sigma_f are offered:

``"fwhm"``
    the Gaussian line has a full width at half maximum of 1/T2* in Hz,
    sigma_f = 1 / (2 sqrt(2 ln 2) T2*).
``"envelope"``
    the free-induction envelope is exp(-(t/T2*)^2),
    sigma_f = 1 / (sqrt(2) pi T2*).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .frames import FrameConfig
from .sequences import PulseSequence, build_fid
from .simulate import evolve
from .spincore import p0_batch

FWHM_PER_SIGMA = 2 * math.sqrt(2 * math.log(2))
T2_CONVENTIONS = ("fwhm", "envelope")

# adaptive quadrature for the free-induction trace: Gauss-Hermite orders tried in
# turn (numpy's rule is unstable beyond ~350 nodes, which caps sigma t near 30)
FID_NODE_TOL = 1e-6
FID_NODE_LADDER = (21, 41, 81, 121, 161, 201, 255, 301, 341)


@dataclass(frozen=True)
class DephasingModel:
    """Gaussian scatter of the qubit frequency.

    Attributes
    ----------
    sigma_f : float
        Standard deviation of the qubit frequency in Hz.
    nodes : int
        Quadrature order; odd so that the unshifted member is always sampled.
    """

    sigma_f: float
    nodes: int = 21

    def __post_init__(self):
        if not (math.isfinite(self.sigma_f) and self.sigma_f >= 0):
            raise ValueError(f"sigma_f must be finite and >= 0, got {self.sigma_f!r}")
        if self.nodes < 3 or self.nodes % 2 == 0:
            raise ValueError(f"nodes must be odd and >= 3, got {self.nodes}")

    @classmethod
    def from_t2star(cls, t2star: float, convention: str = "fwhm", nodes: int = 21) -> "DephasingModel":
        return cls(sigma_from_t2star(t2star, convention), nodes)

    @property
    def sigma(self) -> float:
        """Standard deviation in rad/s."""
        return 2 * math.pi * self.sigma_f

    @property
    def fwhm_hz(self) -> float:
        return FWHM_PER_SIGMA * self.sigma_f

    def t2star(self, convention: str = "fwhm") -> float:
        if self.sigma_f == 0:
            return math.inf
        return t2star_from_sigma(self.sigma_f, convention)

    def with_nodes(self, nodes: int) -> "DephasingModel":
        return DephasingModel(self.sigma_f, nodes)

    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        """Detuning offsets (rad/s) and weights summing to one."""
        if self.sigma_f == 0:
            return np.zeros(1), np.ones(1)
        x, w = hermegauss(self.nodes)
        # symmetric rule: pin the centre node to exactly zero
        x[self.nodes // 2] = 0.0
        return self.sigma * x, w / w.sum()


def sigma_from_t2star(t2star: float, convention: str = "fwhm") -> float:
    if not t2star > 0:
        raise ValueError("T2* must be positive")
    if convention == "fwhm":
        return 1.0 / (FWHM_PER_SIGMA * t2star)
    if convention == "envelope":
        return 1.0 / (math.sqrt(2) * math.pi * t2star)
    raise ValueError(f"convention must be one of {T2_CONVENTIONS}")


def t2star_from_sigma(sigma_f: float, convention: str = "fwhm") -> float:
    # the mapping is its own inverse up to the same constant
    return sigma_from_t2star(sigma_f, convention)


def ensemble_p0(seq: PulseSequence, delta_rf, delta_rf_dd, model: DephasingModel, **kw) -> np.ndarray:
    """Averaged P0 for a batch of frames; the batch shape is kept."""
    offsets, weights = model.quadrature()
    d_rf, d_dd = np.broadcast_arrays(np.asarray(delta_rf, float), np.asarray(delta_rf_dd, float))
    p0 = p0_batch(evolve(seq, d_rf[..., None] + offsets, d_dd[..., None], **kw))
    # fixed-order reduction keeps reruns bit-identical
    return p0 @ weights


def ensemble_average(seq: PulseSequence, frame: FrameConfig, model: DephasingModel, **kw) -> float:
    """Readout probability P0 averaged over the qubit-frequency distribution."""
    return float(ensemble_p0(seq, frame.delta_rf, frame.delta_rf_dd, model, **kw))


@dataclass(frozen=True)
class FidSpectrum:
    times: np.ndarray
    amplitude: np.ndarray
    freqs_hz: np.ndarray
    magnitude: np.ndarray
    fwhm_hz: float
    nodes_used: int

    def write_trace_csv(self, path) -> None:
        _write_columns(path, ("time_s", "amplitude"), self.times, self.amplitude)

    def write_spectrum_csv(self, path) -> None:
        _write_columns(path, ("freq_Hz", "magnitude"), self.freqs_hz, self.magnitude)


def _write_columns(path, header, x, y) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for a, b in zip(x, y):
            w.writerow([repr(float(a)), repr(float(b))])


def fid_trace(times, omega_dd: float, model: DephasingModel, frame: FrameConfig) -> np.ndarray:
    """Averaged coherence 2 P0 - 1 after a Ramsey pair around free evolution."""
    out = np.empty(len(times))
    for k, t in enumerate(times):
        seq = build_fid(float(t), omega_dd, mode="ideal")
        out[k] = 2 * ensemble_average(seq, frame, model) - 1
    return out


def fwhm_of_peak(x: np.ndarray, y: np.ndarray) -> float:
    """Full width at half maximum of the highest peak, by linear interpolation.

    Raises ``ValueError`` when a half-maximum crossing is missing on either side.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    k = int(np.argmax(y))
    half = 0.5 * y[k]
    left = k
    while left > 0 and y[left] > half:
        left -= 1
    right = k
    while right < len(y) - 1 and y[right] > half:
        right += 1
    if y[left] > half or y[right] > half:
        raise ValueError("peak does not fall to half maximum inside the grid")
    xl = x[left] + (half - y[left]) * (x[left + 1] - x[left]) / (y[left + 1] - y[left])
    xr = x[right - 1] + (half - y[right - 1]) * (x[right] - x[right - 1]) / (y[right] - y[right - 1])
    return float(xr - xl)


def fid_spectrum(t_max: float, dt: float, model: DephasingModel, frame: FrameConfig, *,
                 omega_dd: float = 2 * math.pi * 25e6, pad: int = 8) -> FidSpectrum:
    """Free-induction trace, its spectrum and the spectral FWHM (Hz).

    The trace is symmetric in time, so the spectrum is the transform of its
    even extension, i.e. the absorption line.  The quadrature order is raised
    above ``model.nodes`` until the trace changes by less than 1e-6, because a
    fixed low order cannot integrate cos(delta t) once sigma t is large.
    """
    if not (t_max > 0 and dt > 0 and dt < t_max):
        raise ValueError("need 0 < dt < t_max")
    if model.sigma_f > 0 and t_max * model.sigma < 5.0:
        raise ValueError("t_max too short: the free-induction envelope has not decayed")
    times = np.arange(0.0, t_max + 0.5 * dt, dt)

    reach = model.sigma * t_max
    # first order expected to resolve cos(delta t) out to t_max, then one check
    ladder = [n for n in FID_NODE_LADDER if n >= model.nodes and n >= reach**2 / 2.5] or [model.nodes]
    if model.sigma_f == 0:
        ladder = ladder[:1]
    amp = None
    for n in ladder:
        m = model.with_nodes(n)
        offsets, _ = m.quadrature()
        fastest = float(np.max(np.abs(frame.delta_rf + offsets)))
        if fastest * dt >= math.pi:
            raise ValueError(
                f"dt = {dt:.3g} s aliases detunings up to {fastest / (2 * math.pi):.3g} Hz")
        new = fid_trace(times, omega_dd, m, frame)
        if amp is not None and np.max(np.abs(new - amp)) < FID_NODE_TOL:
            amp = new
            break
        amp = new
    else:
        if len(ladder) > 1 or model.sigma_f > 0:
            raise ValueError("quadrature did not converge; shorten t_max")

    two_sided = np.concatenate([amp, amp[:0:-1]])
    n_fft = 1 << int(math.ceil(math.log2(pad * len(two_sided))))
    buf = np.zeros(n_fft)
    buf[: len(amp)] = amp
    buf[n_fft - len(amp) + 1:] = amp[:0:-1]
    spec = np.fft.fftshift(np.abs(np.fft.fft(buf)) * dt)
    freqs = np.fft.fftshift(np.fft.fftfreq(n_fft, dt))
    return FidSpectrum(times, amp, freqs, spec, fwhm_of_peak(freqs, spec), m.nodes)
