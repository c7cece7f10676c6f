import math

import numpy as np
import pytest

from mollowsim.dephasing import DephasingModel
from mollowsim.experiments import (
    ScanResult, SequenceSpec, bandwidth_constant, breakdown_vs_tau, cw_trace, differential_readout,
    differential_signal, falling_crossing, first_sidelobe_ratio, fit_rabi, linewidth_vs_T, local_extrema,
    parabolic_peak, rabi_trace, resonance_position, ridge, scan_delta, scan_map, sideband_offsets,
)
from mollowsim.frames import FrameConfig
from mollowsim.sensitivity import predicted_sz
from mollowsim.sequences import PulseSequence, build_fid
from mollowsim.spincore import NumericalDriftError

TAU = 43.6e-9
WDD = 2 * math.pi * 25e6


# -- differential readout ---------------------------------------------------

def test_readout_of_pole_and_equator_states():
    zero = FrameConfig(0.0, 0.0)
    ramsey = build_fid(0.0)  # pi/2 then -pi/2: back to |0>
    assert differential_readout(ramsey, zero) == pytest.approx(1.0, abs=1e-14)
    flip = PulseSequence("t", (), prep=ramsey.prep, closing=ramsey.prep)  # two pi/2 about y: |1>
    assert differential_readout(flip, zero) == pytest.approx(-1.0, abs=1e-14)
    half = PulseSequence("t", (), prep=ramsey.prep)  # |+>
    assert differential_readout(half, zero) == pytest.approx(0.0, abs=1e-14)


def test_differential_consistency_check(monkeypatch):
    import mollowsim.experiments as ex

    real = ex._p0
    monkeypatch.setattr(ex, "_p0", lambda seq, *a: real(seq, *a) + (1e-6 if seq.readout_flip else 0.0))
    with pytest.raises(NumericalDriftError):
        differential_signal(build_fid(1e-7), 0.0, 0.0)


# -- scans ------------------------------------------------------------------

def test_zero_signal_is_flat():
    spec = SequenceSpec("cpmg", 24, TAU, omega_rf=0.0)
    r = scan_delta(spec, np.linspace(0, 2 * math.pi / TAU, 51))
    assert np.ptp(r.values) < 1e-12


def test_cpmg_resonance_on_grid():
    spec = SequenceSpec("cpmg", 24, TAU, omega_rf=1.5e6)
    d = np.linspace(0, 2 * math.pi / TAU, 201)
    r = scan_delta(spec, d)
    assert abs(resonance_position(d, r.values) - math.pi / TAU) <= d[1] - d[0]


def test_doubling_tau_halves_resonance():
    spec = SequenceSpec("cpmg", 16, 60e-9, omega_rf=1e5)
    d = np.linspace(0.2 * math.pi / 60e-9, 1.5 * math.pi / 60e-9, 801)
    a = resonance_position(d, scan_delta(spec, d).values)
    b = resonance_position(d, scan_delta(spec.replace(tau=120e-9), d).values)
    assert b / a == pytest.approx(0.5, abs=2 * (d[1] - d[0]) / a)


def test_map_is_deterministic_and_worker_independent():
    spec = SequenceSpec("xy4", 8, 80e-9, omega_rf=1e5, phi_rf=None)
    taus = np.linspace(50e-9, 150e-9, 6)
    d = np.linspace(0, 4e7, 41)
    a = scan_map(spec, taus, d, workers=1)
    b = scan_map(spec, taus, d, workers=3)
    c = scan_map(spec, taus, d, workers=1)
    assert np.array_equal(a.values, b.values) and np.array_equal(a.values, c.values)
    assert a.values.shape == (6, 41)
    assert np.all(np.abs(ridge(a) * taus - math.pi / 2) <= 1.5 * (d[1] - d[0]) * taus)


def test_sidelobe_ratio_matches_linear_model():
    spec = SequenceSpec("cpmg", 24, TAU, omega_rf=1e4)
    seq = spec.build()
    d = np.linspace(0.5 * math.pi / TAU, 1.5 * math.pi / TAU, 801)
    sim = first_sidelobe_ratio(d, scan_delta(spec, d).values)
    ref = first_sidelobe_ratio(d, predicted_sz(seq, 1e4, d, math.pi / 2))
    assert sim == pytest.approx(ref, rel=0.2)


def test_grid_checks():
    spec = SequenceSpec("cpmg", 8, TAU)
    with pytest.raises(ValueError):
        scan_delta(spec, [1.0, 0.5])
    with pytest.raises(ValueError):
        scan_delta(spec, [1.0])


def test_auto_phase():
    assert SequenceSpec("cpmg", 8, TAU, phi_rf=None).signal_phase() == pytest.approx(math.pi / 2)
    assert SequenceSpec("xy4", 8, TAU, phi_rf=None).signal_phase() == pytest.approx(3 * math.pi / 4)
    assert SequenceSpec("xy4", 8, TAU).signal_phase() == pytest.approx(math.pi / 2)


# -- helpers ----------------------------------------------------------------

def test_peak_helpers():
    x = np.linspace(-1, 1, 21)
    y = -(x - 0.033) ** 2
    assert parabolic_peak(x, y, int(np.argmax(y))) == pytest.approx(0.033)
    assert list(local_extrema([0, 1, 0, -1, 0])) == [1, 3]
    assert falling_crossing([1, 10, 100], [1.0, 0.6, 0.2]) == pytest.approx(10 ** 1.25)
    assert math.isnan(falling_crossing([1, 2], [1.0, 0.9]))


def test_sideband_offsets_on_synthetic_sinc():
    T = 1e-6
    d = np.linspace(-4e7, 4e7, 4001)
    # cos(d T) has extrema exactly at the expected positions 2 pi k / T
    out = sideband_offsets(d, np.cos(d * T), 0.0, T)
    assert sorted(out) == [-2, -1, 1, 2]
    assert all(steps <= 1 for _, _, steps in out.values())


def test_fit_rabi_recovers_frequency():
    t = np.linspace(0, 3e-6, 40)
    y = 0.7 * np.cos(2.1e6 * t + 0.4) - 0.1
    f = fit_rabi(t, y)
    assert f.omega == pytest.approx(2.1e6, rel=1e-8)
    assert f.amplitude == pytest.approx(0.7, rel=1e-8)
    assert fit_rabi(t, np.full_like(t, 0.3)).omega == 0.0
    with pytest.raises(ValueError):
        fit_rabi(t[:3], y[:3])


def test_rabi_trace_zero_signal_is_constant():
    r = rabi_trace(SequenceSpec("cpmg", 24, TAU), range(24, 144, 24))
    assert np.ptp(r.values) < 1e-12


def test_rabi_trace_cpmg_factor():
    r = rabi_trace(SequenceSpec("cpmg", 24, TAU, omega_rf=1.5e6), range(24, 264, 24))
    assert float(r.metadata["fit_omega_eff_over_omega_rf"]) == pytest.approx(2 / math.pi, rel=0.02)


def test_linewidth_scales_inversely_with_T():
    spec = SequenceSpec("cpmg", 8, TAU, omega_rf=1e4)
    r = linewidth_vs_T(spec, [16, 32, 64])
    assert np.allclose(r.values * r.grid1, r.values[0] * r.grid1[0], rtol=0.03)
    assert bandwidth_constant(r) > 0


def test_breakdown_is_ratio_and_falls():
    spec = SequenceSpec("xy8ps", 24, TAU)
    taus = np.geomspace(50e-9, 4e-6, 8)
    r = breakdown_vs_tau(spec, taus, DephasingModel.from_t2star(1.8e-6))
    assert r.values[0] == pytest.approx(1.0, abs=0.01)
    assert np.all(np.diff(r.values) <= 1e-9)


def test_cw_trace_central_line():
    r = cw_trace(2 * math.pi * 5e6, 2 * math.pi * 0.25e6, np.linspace(0.2e-6, 4e-6, 8), 0.0, central=True)
    assert np.allclose(r.values, np.cos(2 * math.pi * 0.25e6 * r.grid1), atol=1e-3)


# -- result container -------------------------------------------------------

def test_scan_result_checks_and_csv(tmp_path):
    with pytest.raises(ValueError):
        ScanResult("x", [0, 1], [0.5])
    with pytest.raises(ValueError):
        ScanResult("x", [0, 1], [0.5, 1.5])
    with pytest.raises(ValueError):
        ScanResult("x", [0, 1], [-0.5, 0.5], kind="probability")
    r = ScanResult("x", [0, 1], [[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]], "y", [5, 6, 7], metadata={"a": 1})
    csv_path, meta_path = r.write(tmp_path / "m")
    back = ScanResult.read_csv(csv_path)
    assert np.array_equal(back.values, r.values) and np.array_equal(back.grid2, r.grid2)
    assert open(meta_path).read() == "a=1\n"
    one = ScanResult("x", [0.0, 1.0], [0.25, -0.5])
    one.to_csv(tmp_path / "one.csv")
    assert np.array_equal(ScanResult.read_csv(tmp_path / "one.csv").values, one.values)
