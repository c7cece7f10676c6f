"""
Experiment drivers: detuning scans, (tau, Delta) maps, Rabi traces along a
resonance line, linewidth and dephasing-breakdown sweeps, and the CW traces.

Every driver returns a :class:`ScanResult`.  Scans sweep the signal detuning
``Delta = omega_rf - omega_0`` (a signal at omega_0 + Delta) with the drive held
on the qubit line, i.e. the frame ``(delta_rf, delta_rf_dd) = (-Delta, Delta)``.
The readout is the differential signal P0(no flip) - P0(flip) throughout.

Independent grid points may be fanned out to worker processes; results are
always placed by index, so the output does not depend on the worker count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from .dephasing import DephasingModel, ensemble_p0, fwhm_of_peak
from .frames import FrameConfig
from .sensitivity import effective_rabi_factor, optimal_phase, sensitivity_of
from .sequences import PulseSequence, build_cw_central, build_cw_sideband, build_protocol
from .simulate import simulate_p0
from .spincore import NumericalDriftError

DEFAULT_OMEGA_DD = 2 * math.pi * 25e6
DIFF_TOL = 1e-12
KINDS = ("differential", "probability", "ratio", "derived")


# -- results ----------------------------------------------------------------

@dataclass(frozen=True)
class ScanResult:
    """Values on a one- or two-dimensional grid plus a configuration snapshot.

    ``values`` has shape ``(len(grid1),)`` or ``(len(grid1), len(grid2))``.
    ``kind`` fixes the admissible range: differential signals and ratios lie
    in [-1, 1], probabilities in [0, 1]; derived quantities are unchecked.
    """

    axis1: str
    grid1: np.ndarray
    values: np.ndarray
    axis2: Optional[str] = None
    grid2: Optional[np.ndarray] = None
    kind: str = "differential"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        g1 = np.asarray(self.grid1, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid1", g1)
        object.__setattr__(self, "values", v)
        shape = (len(g1),)
        if self.axis2 is not None:
            g2 = np.asarray(self.grid2, dtype=float)
            object.__setattr__(self, "grid2", g2)
            shape = (len(g1), len(g2))
        if v.shape != shape:
            raise ValueError(f"values have shape {v.shape}, grid needs {shape}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown result kind {self.kind!r}")
        lo = 0.0 if self.kind == "probability" else -1.0
        if self.kind != "derived" and v.size and (v.min() < lo - DIFF_TOL or v.max() > 1 + DIFF_TOL):
            raise ValueError(f"{self.kind} values outside [{lo}, 1]")

    @property
    def is_2d(self) -> bool:
        return self.axis2 is not None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            if self.is_2d:
                w.writerow([self.axis1, self.axis2, "value"])
                for i, a in enumerate(self.grid1):
                    for j, b in enumerate(self.grid2):
                        w.writerow([repr(float(a)), repr(float(b)), repr(float(self.values[i, j]))])
            else:
                w.writerow([self.axis1, "value"])
                for a, v in zip(self.grid1, self.values):
                    w.writerow([repr(float(a)), repr(float(v))])

    def write_metadata(self, path) -> None:
        with open(path, "w") as fh:
            for k in sorted(self.metadata):
                fh.write(f"{k}={self.metadata[k]}\n")

    def write(self, stem) -> tuple:
        """Write ``<stem>.csv`` and ``<stem>.meta``; returns both paths."""
        stem = str(stem)
        self.to_csv(stem + ".csv")
        self.write_metadata(stem + ".meta")
        return stem + ".csv", stem + ".meta"

    @classmethod
    def read_csv(cls, path, kind: str = "derived") -> "ScanResult":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        head, body = rows[0], np.array(rows[1:], dtype=float)
        if len(head) == 2:
            return cls(head[0], body[:, 0], body[:, 1], kind=kind)
        g1 = np.unique(body[:, 0])
        g2 = np.unique(body[:, 1])
        return cls(head[0], g1, body[:, 2].reshape(len(g1), len(g2)), head[1], g2, kind=kind)


# -- sequence description ---------------------------------------------------

@dataclass(frozen=True)
class SequenceSpec:
    """Everything needed to rebuild a pulsed program, in SI / rad/s.

    The signal phase defaults to pi/2, orthogonal to the X drive axis.
    ``phi_rf = None`` instead picks the phase that maximises the first-order
    response at the protocol's design resonance (pi/2 for CPMG, 3 pi/4 for
    XY4); resonance maps use it so that the ridge sits on the absorptive
    quadrature.
    """

    protocol: str
    n_pi: int
    tau: float
    omega_rf: float = 0.0
    phi_rf: Optional[float] = math.pi / 2
    omega_dd: float = DEFAULT_OMEGA_DD
    mode: str = "ideal"
    pulse_model: str = "frozen"

    def build(self, **changes) -> PulseSequence:
        s = replace(self, **changes) if changes else self
        return build_protocol(s.protocol, s.n_pi, s.tau, s.omega_dd, omega_rf=s.omega_rf,
                              phi_rf=s.signal_phase(), mode=s.mode)

    def signal_phase(self) -> float:
        if self.phi_rf is not None:
            return float(self.phi_rf)
        probe = build_protocol(self.protocol, self.n_pi, self.tau, self.omega_dd, mode=self.mode)
        return optimal_phase(sensitivity_of(probe), probe.nominal_delta)

    def replace(self, **changes) -> "SequenceSpec":
        return replace(self, **changes)

    def snapshot(self, prefix: str = "") -> dict:
        return {prefix + k: repr(v) if isinstance(v, float) else v for k, v in asdict(self).items()}


def _model_snapshot(model: Optional[DephasingModel]) -> dict:
    if model is None:
        return {"sigma_f_Hz": repr(0.0), "nodes": 0}
    return {"sigma_f_Hz": repr(model.sigma_f), "nodes": model.nodes}


def fan_out(fn, jobs: Sequence, workers: int = 1) -> list:
    """Evaluate ``fn`` on every job; result ``k`` belongs to job ``k``."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


# -- readout ----------------------------------------------------------------

def resonant_frame(delta):
    """Frame detunings for a signal at omega_0 + Delta and a drive on the qubit line."""
    delta = np.asarray(delta, dtype=float)
    return -delta, delta


def _p0(seq, d_rf, d_dd, model, pulse_model):
    if model is None or model.sigma_f == 0:
        return simulate_p0(seq, d_rf, d_dd, pulse_model=pulse_model)
    return ensemble_p0(seq, d_rf, d_dd, model, pulse_model=pulse_model)


def differential_signal(seq: PulseSequence, delta_rf, delta_rf_dd, model: Optional[DephasingModel] = None,
                        pulse_model: str = "frozen") -> np.ndarray:
    """P0 without minus P0 with the extra readout pi pulse, for a batch of frames.

    The flip swaps the populations exactly, so the difference must equal
    2 P0 - 1; a larger discrepancy means the propagation went wrong.
    """
    plain = seq.with_readout_flip(False)
    p_plain = _p0(plain, delta_rf, delta_rf_dd, model, pulse_model)
    p_flip = _p0(plain.with_readout_flip(True), delta_rf, delta_rf_dd, model, pulse_model)
    diff = p_plain - p_flip
    gap = np.max(np.abs(diff - (2 * p_plain - 1))) if np.size(diff) else 0.0
    if gap > DIFF_TOL:
        raise NumericalDriftError(f"differential readout inconsistent by {gap:.3e}")
    return diff


def differential_readout(seq: PulseSequence, frame: FrameConfig, model: Optional[DephasingModel] = None,
                         pulse_model: str = "frozen") -> float:
    return float(differential_signal(seq, frame.delta_rf, frame.delta_rf_dd, model, pulse_model))


# -- detuning scans and maps ------------------------------------------------

def _check_grid(grid, name: str) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError(f"{name} grid must be strictly increasing with at least two points")
    return grid


def _scan_row(job):
    spec, deltas, model = job
    seq = spec.build()
    return differential_signal(seq, *resonant_frame(deltas), model, spec.pulse_model)


def scan_delta(spec: SequenceSpec, deltas, model: Optional[DephasingModel] = None) -> ScanResult:
    """Differential signal against the signal detuning at fixed tau and n_pi."""
    deltas = _check_grid(deltas, "delta")
    values = _scan_row((spec, deltas, model))
    meta = {"experiment": "scan_delta", **spec.snapshot(), **_model_snapshot(model)}
    return ScanResult("delta_rad_s", deltas, values, metadata=meta)


def scan_map(spec: SequenceSpec, taus, deltas, model: Optional[DephasingModel] = None,
             workers: int = 1) -> ScanResult:
    """Differential signal on a (tau, Delta) grid at fixed pulse count."""
    taus = _check_grid(taus, "tau")
    deltas = _check_grid(deltas, "delta")
    rows = fan_out(_scan_row, [(spec.replace(tau=float(t)), deltas, model) for t in taus], workers)
    meta = {"experiment": "scan_map", **spec.snapshot(), **_model_snapshot(model)}
    meta.pop("tau")
    return ScanResult("tau_s", taus, np.array(rows), "delta_rad_s", deltas, metadata=meta)


def parabolic_peak(x: np.ndarray, y: np.ndarray, k: int) -> float:
    """Abscissa of the vertex through samples k-1, k, k+1 (x assumed uniform)."""
    if k <= 0 or k >= len(y) - 1:
        return float(x[k])
    den = y[k - 1] - 2 * y[k] + y[k + 1]
    if den == 0:
        return float(x[k])
    shift = 0.5 * (y[k - 1] - y[k + 1]) / den
    return float(x[k] + shift * (x[k + 1] - x[k]))


def resonance_position(deltas, values) -> float:
    """Detuning of the strongest response, refined by parabolic interpolation."""
    mag = np.abs(np.asarray(values, dtype=float))
    return parabolic_peak(np.asarray(deltas, dtype=float), mag, int(np.argmax(mag)))


def ridge(result: ScanResult) -> np.ndarray:
    """Resonance detuning for every row of a (tau, Delta) map."""
    if not result.is_2d:
        raise ValueError("ridge extraction needs a 2D map")
    return np.array([resonance_position(result.grid2, row) for row in result.values])


def local_extrema(values) -> np.ndarray:
    """Indices of strict interior local maxima and minima."""
    v = np.asarray(values, dtype=float)
    d = np.sign(np.diff(v))
    return np.nonzero(d[:-1] * d[1:] < 0)[0] + 1


def sideband_offsets(deltas, values, center: float, T: float, ks=(1, 2)) -> dict:
    """Distance (in grid steps) from each expected side-band position to the
    nearest local extremum of the profile.

    Expected positions are ``center +- 2 pi k / T``.
    """
    deltas = np.asarray(deltas, dtype=float)
    step = float(np.mean(np.diff(deltas)))
    ext = deltas[local_extrema(values)]
    out = {}
    for k in ks:
        for sgn in (-1, 1):
            target = center + sgn * 2 * math.pi * k / T
            near = float(ext[np.argmin(np.abs(ext - target))]) if len(ext) else math.nan
            out[(sgn * k)] = (target, near, abs(near - target) / step)
    return out


def first_sidelobe_ratio(deltas, values) -> float:
    """Largest side-lobe magnitude next to the main lobe, relative to the main peak."""
    mag = np.abs(np.asarray(values, dtype=float))
    k = int(np.argmax(mag))
    zeros = np.nonzero(np.diff(np.sign(np.asarray(values, dtype=float))) != 0)[0]
    right = zeros[zeros >= k]
    left = zeros[zeros < k]
    lobes = []
    if len(right) >= 2:
        lobes.append(mag[right[0] + 1: right[1] + 1].max())
    if len(left) >= 2:
        lobes.append(mag[left[-2] + 1: left[-1] + 1].max())
    if not lobes:
        raise ValueError("no complete side lobe inside the grid")
    return float(max(lobes) / mag[k])


# -- Rabi traces ------------------------------------------------------------

@dataclass(frozen=True)
class RabiFit:
    omega: float
    amplitude: float
    phase: float
    offset: float
    rms: float

    def __call__(self, t):
        return self.amplitude * np.cos(self.omega * np.asarray(t) + self.phase) + self.offset


def _linear_fit(t, y, w):
    basis = np.stack([np.cos(w * t), np.sin(w * t), np.ones_like(t)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    res = y - basis @ coef
    return coef, float(res @ res)


def fit_rabi(t, y, omega_max: Optional[float] = None) -> RabiFit:
    """Least-squares fit of A cos(w t + phi) + C.

    The starting frequency is the best of a dense scan in which A, phi and C
    are solved linearly (a least-squares periodogram, usable on uneven grids
    and on traces shorter than one period); all four parameters are then
    refined jointly.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(t) < 5:
        raise ValueError("need at least five samples to fit an oscillation")
    span = t.max() - t.min()
    if omega_max is None:
        omega_max = math.pi / float(np.min(np.diff(np.sort(t))))
    if np.ptp(y) == 0:
        return RabiFit(0.0, 0.0, 0.0, float(y[0]), 0.0)
    grid = np.linspace(0.25 * math.pi / span, omega_max, 4000)
    costs = [_linear_fit(t, y, w)[1] for w in grid]
    w0 = grid[int(np.argmin(costs))]
    (a, b, c), _ = _linear_fit(t, y, w0)

    def resid(p):
        return p[1] * np.cos(p[0] * t + p[2]) + p[3] - y

    p0 = [w0, math.hypot(a, b), math.atan2(-b, a), c]
    sol = least_squares(resid, p0, x_scale="jac", xtol=1e-14, ftol=1e-14, gtol=1e-14)
    w, amp, ph, off = sol.x
    if amp < 0:
        amp, ph = -amp, ph + math.pi
    rms = float(np.sqrt(np.mean(sol.fun ** 2)))
    return RabiFit(abs(float(w)), float(amp), float(math.remainder(ph if w > 0 else -ph, 2 * math.pi)), float(off), rms)


def _trace_point(job):
    spec, n, delta, model = job
    seq = spec.build(n_pi=int(n))
    v = differential_signal(seq, *resonant_frame(delta), model, spec.pulse_model)
    return seq.signal_time, float(v)


def rabi_trace(spec: SequenceSpec, n_grid, delta: Optional[float] = None,
               model: Optional[DephasingModel] = None, workers: int = 1) -> ScanResult:
    """Differential signal against signal exposure time, growing the pulse count.

    ``delta`` defaults to the protocol's nominal resonance at ``spec.tau``.
    The fitted effective Rabi frequency is stored in the metadata.
    """
    n_grid = [int(n) for n in n_grid]
    if delta is None:
        delta = spec.build(n_pi=n_grid[0]).nominal_delta
    pts = fan_out(_trace_point, [(spec, n, delta, model) for n in n_grid], workers)
    t = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    fit = fit_rabi(t, y)
    meta = {"experiment": "rabi_trace", **spec.snapshot(), **_model_snapshot(model),
            "delta_rad_s": repr(float(delta)), "n_grid": " ".join(map(str, n_grid)),
            "fit_omega_eff_rad_s": repr(fit.omega), "fit_rms": repr(fit.rms)}
    if spec.omega_rf > 0:
        meta["fit_omega_eff_over_omega_rf"] = repr(fit.omega / spec.omega_rf)
    meta.pop("n_pi")
    return ScanResult("exposure_s", t, y, metadata=meta)


def rabi_fit_of(result: ScanResult) -> float:
    return float(result.metadata["fit_omega_eff_rad_s"])


# -- linewidth and breakdown ------------------------------------------------

def _linewidth_point(job):
    spec, n, span, points, model = job
    seq = spec.build(n_pi=int(n))
    T = seq.body_duration
    center = seq.nominal_delta
    half = span * 2 * math.pi / T
    deltas = np.linspace(center - half, center + half, points)
    sig = differential_signal(seq, *resonant_frame(deltas), model, spec.pulse_model)
    base = differential_signal(spec.build(n_pi=int(n), omega_rf=0.0), *resonant_frame(deltas), model,
                               spec.pulse_model)
    return T, fwhm_of_peak(deltas, np.abs(sig - base))


def linewidth_vs_T(spec: SequenceSpec, n_grid, model: Optional[DephasingModel] = None, *,
                   span: float = 2.0, points: int = 201, workers: int = 1) -> ScanResult:
    """FWHM (rad/s) of the resonance for each sequence length T = n_pi tau.

    Each profile spans ``center +- span * 2 pi / T``.  The FWHM is taken on the
    magnitude of the baseline-subtracted differential signal.
    """
    n_grid = [int(n) for n in n_grid]
    pts = fan_out(_linewidth_point, [(spec, n, span, points, model) for n in n_grid], workers)
    T = np.array([p[0] for p in pts])
    fwhm = np.array([p[1] for p in pts])
    meta = {"experiment": "linewidth_vs_T", **spec.snapshot(), **_model_snapshot(model),
            "n_grid": " ".join(map(str, n_grid)), "span": repr(span), "points": points}
    meta.pop("n_pi")
    if model is not None and model.sigma_f > 0:
        # inhomogeneous line width 1/T2* in Hz, as an angular FWHM
        meta["reference_fwhm_rad_s"] = repr(2 * math.pi * model.fwhm_hz)
    return ScanResult("T_s", T, fwhm, kind="derived", metadata=meta)


def bandwidth_constant(result: ScanResult) -> float:
    """Least-squares c in FWHM = c / T."""
    x = 1.0 / result.grid1
    return float(x @ result.values / (x @ x))


def _breakdown_point(job):
    spec, tau, rotation, model = job
    probe = spec.build(tau=float(tau))
    delta = probe.nominal_delta
    factor = float(effective_rabi_factor(probe, delta))
    omega_rf = rotation / (factor * probe.body_duration)
    seq = spec.build(tau=float(tau), omega_rf=omega_rf)
    frame = resonant_frame(delta)
    ideal = differential_signal(seq, *frame, None, spec.pulse_model)
    mixed = differential_signal(seq, *frame, model, spec.pulse_model)
    return float(mixed / ideal)


def breakdown_vs_tau(spec: SequenceSpec, taus, model: DephasingModel, *, rotation: float = 0.1,
                     workers: int = 1) -> ScanResult:
    """Ensemble-averaged response relative to the unbroadened one, against tau.

    The pulse count is fixed by ``spec``; the signal amplitude is scaled with
    tau so that the unbroadened rotation stays at ``rotation`` rad, which keeps
    the comparison in the linear regime.
    """
    taus = _check_grid(taus, "tau")
    ratios = fan_out(_breakdown_point, [(spec, t, rotation, model) for t in taus], workers)
    meta = {"experiment": "breakdown_vs_tau", **spec.snapshot(), **_model_snapshot(model),
            "rotation_rad": repr(rotation)}
    meta.pop("tau")
    meta.pop("omega_rf")
    return ScanResult("tau_s", taus, np.array(ratios), kind="ratio", metadata=meta)


def falling_crossing(x, y, level: float = 0.5) -> float:
    """First x where y drops below ``level``, interpolated in log x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    below = np.nonzero(y < level)[0]
    if len(below) == 0 or below[0] == 0:
        return math.nan
    k = below[0]
    lx = np.interp(level, [y[k], y[k - 1]], [math.log(x[k]), math.log(x[k - 1])])
    return float(math.exp(lx))


# -- CW protocols -----------------------------------------------------------

def _cw_point(job):
    duration, omega_dd, omega_rf, delta, central = job
    if central:
        seq = build_cw_central(duration, omega_dd, omega_rf)
    else:
        seq = build_cw_sideband(duration, omega_dd, omega_rf, delta)
    v = differential_signal(seq, *resonant_frame(delta), None, "exact")
    return seq.body[0].duration, float(v)


def cw_trace(omega_dd: float, omega_rf: float, durations, delta: float, *, central: bool = False,
             workers: int = 1) -> ScanResult:
    """Differential signal against CW drive length (rounded to whole pi turns).

    Preparation and closing pulses use the exact drive-frame pulse model; with
    a drive as slow as a few MHz the frozen-phase shortcut is not accurate.
    """
    durations = _check_grid(durations, "duration")
    pts = fan_out(_cw_point, [(float(d), omega_dd, omega_rf, delta, central) for d in durations], workers)
    t = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    meta = {"experiment": "cw_trace", "omega_dd": repr(omega_dd), "omega_rf": repr(omega_rf),
            "delta_rad_s": repr(float(delta)), "central": central}
    return ScanResult("drive_s", t, y, metadata=meta)
