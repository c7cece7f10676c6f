import math

import numpy as np
import pytest

from mollowsim.sequences import (
    DRIVE, SIGNAL, PulseSegment, SequenceError, build_cpmg, build_cw_central, build_cw_sideband, build_dd,
    build_fid, build_protocol, build_xy8, dumps, hard_violations, loads, phase_switching_program,
    read_sequence, sign_pattern, validate, write_sequence,
)

TAU = 43.6e-9
WDD = 2 * math.pi * 25e6


@pytest.mark.parametrize("protocol,n", [("cpmg", 24), ("xy4", 24), ("xy8", 24), ("xy8ps", 24)])
@pytest.mark.parametrize("mode", ["ideal", "finite"])
def test_builders_are_valid(protocol, n, mode):
    seq = build_protocol(protocol, n, TAU, WDD, omega_rf=1e6, mode=mode)
    violations = validate(seq)
    assert hard_violations(violations) == []
    # plain XY8 spaces its X pulses unevenly and is flagged as needing phase control
    assert bool(violations) == (protocol == "xy8")
    assert seq.n_pi == n
    assert seq.body_duration == pytest.approx(n * TAU, rel=1e-12)


def test_pulse_centres_are_equidistant():
    seq = build_cpmg(10, TAU, WDD, mode="finite")
    c = np.array(seq.pulse_centers())
    assert c[0] == pytest.approx(TAU / 2)
    assert np.allclose(np.diff(c), TAU, rtol=1e-12)


def test_axis_patterns():
    assert build_protocol("xy4", 8, TAU, WDD).axes == list("XYXY") * 2
    assert build_protocol("xy8", 8, TAU, WDD).axes == ["X", "Y", "X", "Y", "Y", "X", "Y", "X"]


def test_nominal_resonances():
    assert build_protocol("cpmg", 8, TAU, WDD).nominal_delta == pytest.approx(math.pi / TAU)
    assert build_protocol("xy4", 8, TAU, WDD).nominal_delta == pytest.approx(math.pi / (2 * TAU))
    assert build_protocol("xy8ps", 8, TAU, WDD).nominal_delta == 0.0


def test_sign_pattern_and_phase_switching():
    assert sign_pattern(["X", "Y", "X", "Y"]) == [1, -1, -1, 1, 1]
    assert sign_pattern(["Y", "-Y"]) == [1, 1, 1]
    assert phase_switching_program(["X", "X"]) == [0.0, math.pi, 0.0]
    seq = build_xy8(1, TAU, WDD, phase_switching=True)
    assert seq.signal_phase_program == pytest.approx(phase_switching_program(seq.axes))


@pytest.mark.parametrize("kwargs", [
    dict(protocol="xy4", n_pi=6),
    dict(protocol="xy8", n_pi=12),
    dict(protocol="nope", n_pi=8),
    dict(protocol="cpmg", n_pi=0),
    dict(protocol="cpmg", n_pi=8, tau=10e-9),
])
def test_builder_rejects(kwargs):
    kw = dict(tau=TAU)
    kw.update(kwargs)
    with pytest.raises(SequenceError):
        build_protocol(kw.pop("protocol"), kw.pop("n_pi"), kw.pop("tau"), WDD)


def test_validation_flags_bad_area_and_spacing():
    seq = build_cpmg(4, TAU, WDD)
    body = list(seq.body)
    body[1] = PulseSegment(DRIVE, 1.1 * math.pi / WDD, WDD, 0.0, "X")
    rules = {v.rule for v in validate(type(seq)(**{**seq.__dict__, "body": tuple(body)}))}
    assert "area" in rules
    body = list(seq.body)
    body[2] = PulseSegment(SIGNAL, 1.3 * TAU, 0.0, math.pi / 2)
    bad = validate(type(seq)(**{**seq.__dict__, "body": tuple(body)}))
    assert any(v.rule == "spacing" for v in hard_violations(bad))


def test_unequal_x_spacing_is_advisory_only():
    seq = build_dd(["X", "Y", "X", "Y", "Y", "X", "Y", "X"], TAU, WDD)
    v = validate(seq)
    assert v and all(x.advisory for x in v)
    assert hard_violations(v) == []


def test_unlabelled_drive_is_flagged():
    seq = build_cpmg(2, TAU, WDD)
    body = list(seq.body)
    body[1] = PulseSegment(DRIVE, math.pi / WDD, WDD, 0.0, "-")
    assert any(v.rule == "label" for v in validate(type(seq)(**{**seq.__dict__, "body": tuple(body)})))


@pytest.mark.parametrize("seq", [
    build_protocol("xy8ps", 16, TAU, WDD, omega_rf=1.5e6, mode="finite"),
    build_cpmg(3, TAU, WDD, phi_rf=0.3),
    build_cw_sideband(1e-6, WDD, 1e5, WDD),
    build_fid(1e-6),
])
def test_text_round_trip(seq, tmp_path):
    text = dumps(seq)
    assert text.isascii()
    again = loads(text)
    assert again == seq
    assert dumps(again) == text
    path = tmp_path / "seq.txt"
    write_sequence(seq, path)
    assert read_sequence(path) == seq


def test_text_parse_errors():
    with pytest.raises(SequenceError):
        loads("SignalWindow 1e-9 0\n")
    with pytest.raises(SequenceError):
        loads("Laser 1e-9 0 0 -\n")
    assert loads("# only a comment\n\n").body == ()


def test_with_signal_keeps_program():
    seq = build_protocol("xy8ps", 8, TAU, WDD)
    s2 = seq.with_signal(2e6, 0.4)
    assert all(w.amplitude == 2e6 for w in s2.signal_windows)
    assert s2.signal_phase_program == pytest.approx(seq.signal_phase_program)
    with pytest.raises(SequenceError):
        seq.with_signal(-1.0)


def test_cw_builders_round_to_pi_turns():
    t_pi = math.pi / WDD
    seq = build_cw_sideband(7.3 * t_pi, WDD, 1e5, WDD)
    assert seq.body[0].area == pytest.approx(7 * math.pi)
    assert validate(seq) == []
    cen = build_cw_central(7.3 * t_pi, WDD, 1e5)
    assert cen.body[0].area == pytest.approx(8 * math.pi)
    assert cen.prep.label == "X" and cen.closing.label == "-X"
    assert build_cw_sideband(0.0, WDD, 1e5, WDD).body[0].area == pytest.approx(math.pi)
    with pytest.raises(SequenceError):
        build_cw_sideband(1e-6, WDD, 1e5, WDD, prep_axis="Z")


def test_fid_builder():
    seq = build_fid(2e-6)
    assert seq.total_duration == pytest.approx(2e-6)
    assert build_fid(0.0).body == ()
    with pytest.raises(SequenceError):
        build_fid(-1.0)


def test_signal_time_excludes_pulses():
    seq = build_cpmg(8, TAU, WDD, mode="finite")
    assert seq.signal_time == pytest.approx(8 * (TAU - math.pi / WDD))
