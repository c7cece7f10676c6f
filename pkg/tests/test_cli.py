import math
import os

import pytest

from mollowsim import cli
from mollowsim.config import ConfigError, hz_to_rad_s, parse_config
from mollowsim.presets import PRESETS, preset_text

SCAN = """
[run]
experiment = scan_delta
name = scan
workers = 1
[sequence]
protocol = cpmg
n_pi = 8
tau_s = {tau}
omega_rf_Hz = 1e5
[grid]
delta_start_Hz = 0
delta_stop_Hz = 20e6
delta_count = 41
"""


def _write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_list_shows_presets(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    assert len(PRESETS) >= 10
    for name in PRESETS:
        assert name in out


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_every_preset_runs(name, tmp_path, capsys):
    assert cli.main(["preset", name, "--out", str(tmp_path)]) == 0
    files = {p.name for p in tmp_path.iterdir()}
    assert f"{name}.meta" in files
    assert any(f.endswith(".csv") for f in files)
    assert capsys.readouterr().out.strip()


def test_preset_dump_and_unknown(capsys):
    assert cli.main(["preset", "fig3d", "--dump"]) == 0
    assert "experiment = compare" in capsys.readouterr().out
    assert cli.main(["preset", "figure3d", "--dump"]) == 0
    assert cli.main(["preset", "nope"]) == cli.EXIT_CONFIG


def test_hz_is_converted_once():
    assert hz_to_rad_s(1e6) == pytest.approx(2 * math.pi * 1e6)
    cfg = parse_config(SCAN.format(tau=100e-9).replace("omega_rf_Hz = 1e5", "omega_rf_Hz = 1e6"))
    assert cfg.omega_rf == 2 * math.pi * 1e6
    assert cfg.omega_dd == 2 * math.pi * 25e6
    assert cfg.delta_grid.stop == 2 * math.pi * 20e6
    cfg = parse_config(SCAN.format(tau=100e-9).replace("omega_rf_Hz", "omega_rf_rad_s"))
    assert cfg.omega_rf == 1e5


def test_phase_keys():
    base = SCAN.format(tau=100e-9)
    assert parse_config(base).phi_rf == pytest.approx(math.pi / 2)
    auto = base.replace("protocol = cpmg", "protocol = cpmg\nphi_rf = auto")
    assert parse_config(auto).phi_rf is None
    zero = base.replace("protocol = cpmg", "protocol = cpmg\nphi_rf = 0")
    assert parse_config(zero).phi_rf == 0.0


@pytest.mark.parametrize("bad", [
    SCAN.format(tau=-1e-7),
    SCAN.format(tau=1e-7).replace("scan_delta", "nonsense"),
    SCAN.format(tau=1e-7).replace("delta_count = 41", "delta_count = 1"),
    SCAN.format(tau=1e-7).replace("n_pi = 8", "n_pi = x"),
    SCAN.format(tau=1e-7).replace("omega_rf_Hz = 1e5", "omega_rf_Hz = 1e5\nomega_rf_rad_s = 1"),
    SCAN.format(tau=1e-7) + "[extra]\n",
    "not an ini file",
])
def test_config_errors_exit_2_and_write_nothing(bad, tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", _write(tmp_path, bad), "--out", str(out)]) == cli.EXIT_CONFIG
    assert not out.exists() or not any(out.iterdir())
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_missing_config_file(tmp_path):
    assert cli.main(["run", str(tmp_path / "absent.ini")]) == cli.EXIT_CONFIG


@pytest.mark.parametrize("text", [
    SCAN.format(tau=10e-9),  # shorter than the pi pulse
    SCAN.format(tau=1e-7).replace("protocol = cpmg", "protocol = xy4").replace("n_pi = 8", "n_pi = 6"),
])
def test_validation_errors_exit_3(text, tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", _write(tmp_path, text), "--out", str(out)]) == cli.EXIT_VALIDATION
    assert not out.exists() or not any(out.iterdir())


def test_numerical_failure_exits_4(tmp_path):
    text = preset_text("s1").replace("t_max_s = 9e-6", "t_max_s = 0.5e-6")
    out = tmp_path / "out"
    assert cli.main(["run", _write(tmp_path, text), "--out", str(out)]) == cli.EXIT_NUMERIC
    assert not out.exists() or not any(out.iterdir())


def test_snapshot_reruns_bit_identically(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", _write(tmp_path, SCAN.format(tau=100e-9)), "--out", str(a)]) == 0
    assert cli.main(["run", str(a / "scan.meta"), "--out", str(b)]) == 0
    assert (a / "scan.csv").read_bytes() == (b / "scan.csv").read_bytes()
    assert (a / "scan.meta").read_text() == (b / "scan.meta").read_text()
    assert parse_config((a / "scan.meta").read_text()) == parse_config(SCAN.format(tau=100e-9))


def test_output_directory_precedence(tmp_path, monkeypatch):
    text = SCAN.format(tau=100e-9) + f"[output]\ndir = {tmp_path / 'cfg'}\n"
    path = _write(tmp_path, text)
    assert cli.main(["run", path]) == 0
    assert (tmp_path / "cfg" / "scan.csv").exists()
    monkeypatch.setenv("MOLLOWSIM_OUT", str(tmp_path / "env"))
    assert cli.main(["run", path]) == 0
    assert (tmp_path / "env" / "scan.csv").exists()
    assert cli.main(["run", path, "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "scan.csv").exists()


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "mollowsim", "list"], capture_output=True, text=True,
                       env={**os.environ})
    assert r.returncode == 0 and "fig3b" in r.stdout
