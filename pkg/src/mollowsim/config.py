"""
Run configuration: INI text with sections, parsed into a :class:`RunConfig`.

Frequencies given as ``*_Hz`` are plain-cycle values and are converted to
rad/s here, once; ``*_rad_s`` keys are taken as angular already.  Every other
module works in rad/s only.

Example::

    [run]
    experiment = scan_delta
    name = cpmg_scan

    [sequence]
    protocol = cpmg
    n_pi = 24
    tau_s = 43.6e-9
    omega_dd_Hz = 25e6
    omega_rf_rad_s = 1.5e6

    [grid]
    delta_start_Hz = 0
    delta_stop_Hz = 22.9e6
    delta_count = 201
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field
from typing import Optional

EXPERIMENTS = (
    "scan_delta", "compare", "scan_map", "rabi_trace", "rabi_factors",
    "linewidth", "breakdown", "fid", "cw_trace",
)
SECTIONS = ("run", "sequence", "grid", "dephasing", "output")
OUT_ENV = "MOLLOWSIM_OUT"


class ConfigError(ValueError):
    """The configuration text is malformed or physically inadmissible."""


def hz_to_rad_s(f_hz: float) -> float:
    return 2 * math.pi * f_hz


@dataclass(frozen=True)
class Grid:
    start: float
    stop: float
    count: int
    spacing: str = "linear"

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ConfigError("grid bounds must be finite")
        if not self.start < self.stop:
            raise ConfigError(f"grid start {self.start!r} must be below stop {self.stop!r}")
        if self.count < 2:
            raise ConfigError("grid needs at least two points")
        if self.spacing not in ("linear", "log"):
            raise ConfigError("grid spacing must be linear or log")
        if self.spacing == "log" and self.start <= 0:
            raise ConfigError("log grid needs a positive start")

    def values(self):
        import numpy as np

        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    name: str
    workers: int
    protocol: str
    protocols: tuple
    n_pi: int
    tau: float
    omega_dd: float
    omega_rf: float
    phi_rf: Optional[float]
    mode: str
    pulse_model: str
    delta: Optional[float]
    delta_grid: Optional[Grid]
    tau_grid: Optional[Grid]
    n_grid: tuple
    duration_grid: Optional[Grid]
    t_max: Optional[float]
    dt: Optional[float]
    sigma_f: float
    nodes: int
    central: bool
    rotation: float
    out_dir: str
    source: dict = field(default_factory=dict, compare=False)


class _Reader:
    """Typed access to a parsed INI file with uniform error messages."""

    def __init__(self, cp: configparser.ConfigParser):
        self.cp = cp

    def has(self, sec: str, key: str) -> bool:
        return self.cp.has_option(sec, key)

    def raw(self, sec: str, key: str, default=None):
        if self.cp.has_option(sec, key):
            return self.cp.get(sec, key).strip()
        if default is None:
            raise ConfigError(f"missing [{sec}] {key}")
        return default

    def float(self, sec: str, key: str, default=None) -> float:
        text = self.raw(sec, key, None if default is None else repr(default))
        try:
            v = float(text)
        except ValueError:
            raise ConfigError(f"[{sec}] {key} = {text!r} is not a number") from None
        if not math.isfinite(v):
            raise ConfigError(f"[{sec}] {key} must be finite")
        return v

    def positive(self, sec: str, key: str, default=None) -> float:
        v = self.float(sec, key, default)
        if v <= 0:
            raise ConfigError(f"[{sec}] {key} must be positive, got {v!r}")
        return v

    def int(self, sec: str, key: str, default=None) -> int:
        text = self.raw(sec, key, None if default is None else str(default))
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"[{sec}] {key} = {text!r} is not an integer") from None

    def bool(self, sec: str, key: str, default: bool = False) -> bool:
        if not self.has(sec, key):
            return default
        try:
            return self.cp.getboolean(sec, key)
        except ValueError:
            raise ConfigError(f"[{sec}] {key} is not a boolean") from None

    def angular(self, sec: str, stem: str, default=None, positive: bool = False) -> Optional[float]:
        """Read ``<stem>_Hz`` (converted) or ``<stem>_rad_s`` (as is)."""
        hz, rad = self.has(sec, stem + "_Hz"), self.has(sec, stem + "_rad_s")
        if hz and rad:
            raise ConfigError(f"give either {stem}_Hz or {stem}_rad_s, not both")
        if hz:
            v = hz_to_rad_s(self.float(sec, stem + "_Hz"))
        elif rad:
            v = self.float(sec, stem + "_rad_s")
        else:
            return default
        if positive and v <= 0:
            raise ConfigError(f"[{sec}] {stem} must be positive")
        return v

    def grid(self, stem: str, angular: bool = False) -> Optional[Grid]:
        sec = "grid"
        if not self.has(sec, stem + "_count"):
            return None
        if angular:
            start = self.angular(sec, stem + "_start")
            stop = self.angular(sec, stem + "_stop")
            if start is None or stop is None:
                raise ConfigError(f"[grid] needs {stem}_start and {stem}_stop")
        else:
            start = self.float(sec, stem + "_start_s")
            stop = self.float(sec, stem + "_stop_s")
            if start <= 0:
                raise ConfigError(f"[grid] {stem}_start_s must be positive")
        return Grid(start, stop, self.int(sec, stem + "_count"), self.raw(sec, stem + "_spacing", "linear"))


def _default_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def parse_config(text: str) -> RunConfig:
    """Parse and check a configuration; raises :class:`ConfigError`."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable configuration: {exc}") from None
    for sec in cp.sections():
        if sec not in SECTIONS and sec != "result":
            raise ConfigError(f"unknown section [{sec}]")
    r = _Reader(cp)

    experiment = r.raw("run", "experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    workers = r.int("run", "workers", _default_workers())
    if workers < 1:
        raise ConfigError("[run] workers must be at least 1")

    protocol = r.raw("sequence", "protocol", "cpmg").lower()
    protocols = tuple(p.strip().lower() for p in r.raw("sequence", "protocols", protocol).split(","))
    mode = r.raw("sequence", "mode", "ideal")
    if mode not in ("ideal", "finite"):
        raise ConfigError("[sequence] mode must be ideal or finite")
    pulse_model = r.raw("sequence", "pulse_model", "frozen")
    if pulse_model not in ("frozen", "exact"):
        raise ConfigError("[sequence] pulse_model must be frozen or exact")
    # signal phase: pi/2 unless given; "auto" picks the max-response phase
    phi_text = r.raw("sequence", "phi_rf", repr(math.pi / 2))
    phi_rf = None if phi_text == "auto" else r.float("sequence", "phi_rf", math.pi / 2)

    omega_rf = r.angular("sequence", "omega_rf", 0.0)
    if omega_rf < 0:
        raise ConfigError("[sequence] omega_rf must be non-negative")

    n_grid = ()
    if r.has("grid", "n_list"):
        try:
            n_grid = tuple(int(x) for x in r.raw("grid", "n_list").replace(",", " ").split())
        except ValueError:
            raise ConfigError("[grid] n_list must hold integers") from None
    elif r.has("grid", "n_start"):
        a, b, s = r.int("grid", "n_start"), r.int("grid", "n_stop"), r.int("grid", "n_step")
        if s < 1 or a > b:
            raise ConfigError("[grid] needs n_start <= n_stop and n_step >= 1")
        n_grid = tuple(range(a, b + 1, s))
    if any(n < 1 for n in n_grid):
        raise ConfigError("[grid] pulse counts must be positive")

    if r.has("dephasing", "sigma_f_Hz") and r.has("dephasing", "t2star_s"):
        raise ConfigError("give either sigma_f_Hz or t2star_s, not both")
    if r.has("dephasing", "t2star_s"):
        from .dephasing import sigma_from_t2star

        try:
            sigma_f = sigma_from_t2star(r.positive("dephasing", "t2star_s"), r.raw("dephasing", "convention", "fwhm"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    else:
        sigma_f = r.float("dephasing", "sigma_f_Hz", 0.0)
        if sigma_f < 0:
            raise ConfigError("[dephasing] sigma_f_Hz must be non-negative")
    nodes = r.int("dephasing", "nodes", 21)
    if nodes < 3 or nodes % 2 == 0:
        raise ConfigError("[dephasing] nodes must be odd and >= 3")

    out_dir = os.environ.get(OUT_ENV) or r.raw("output", "dir", "mollowsim_out")

    cfg = RunConfig(
        experiment=experiment,
        name=r.raw("run", "name", experiment),
        workers=workers,
        protocol=protocol,
        protocols=protocols,
        n_pi=r.int("sequence", "n_pi", 24),
        tau=r.positive("sequence", "tau_s", 43.6e-9),
        omega_dd=r.angular("sequence", "omega_dd", hz_to_rad_s(25e6), positive=True),
        omega_rf=omega_rf,
        phi_rf=phi_rf,
        mode=mode,
        pulse_model=pulse_model,
        delta=r.angular("sequence", "delta"),
        delta_grid=r.grid("delta", angular=True),
        tau_grid=r.grid("tau"),
        n_grid=n_grid,
        duration_grid=r.grid("duration"),
        t_max=r.positive("grid", "t_max_s") if r.has("grid", "t_max_s") else None,
        dt=r.positive("grid", "dt_s") if r.has("grid", "dt_s") else None,
        sigma_f=sigma_f,
        nodes=nodes,
        central=r.bool("sequence", "central"),
        rotation=r.positive("run", "rotation_rad", 0.1),
        out_dir=out_dir,
        source={s: dict(cp.items(s)) for s in cp.sections() if s != "result"},
    )
    if cfg.n_pi < 1:
        raise ConfigError("[sequence] n_pi must be positive")
    _require_inputs(cfg)
    return cfg


_NEEDS = {
    "scan_delta": ("delta_grid",),
    "compare": ("delta_grid",),
    "scan_map": ("delta_grid", "tau_grid"),
    "rabi_trace": ("n_grid",),
    "rabi_factors": ("n_grid",),
    "linewidth": ("n_grid",),
    "breakdown": ("tau_grid",),
    "fid": ("t_max", "dt"),
    "cw_trace": ("duration_grid",),
}


def _require_inputs(cfg: RunConfig) -> None:
    for attr in _NEEDS[cfg.experiment]:
        if not getattr(cfg, attr):
            raise ConfigError(f"experiment {cfg.experiment} needs a {attr.replace('_', ' ')} in [grid]")
    if cfg.experiment in ("breakdown", "fid") and cfg.sigma_f == 0:
        raise ConfigError(f"experiment {cfg.experiment} needs a dephasing model")


def snapshot_text(cfg: RunConfig, result_info: Optional[dict] = None) -> str:
    """The configuration as read (strings verbatim) plus a [result] section.

    Feeding this text back to :func:`parse_config` reproduces ``cfg``; the
    [result] section is ignored on input.
    """
    lines = []
    for sec in SECTIONS:
        if sec in cfg.source:
            lines.append(f"[{sec}]")
            lines.extend(f"{k} = {v}" for k, v in cfg.source[sec].items())
            lines.append("")
    if result_info:
        lines.append("[result]")
        lines.extend(f"{k} = {v}" for k, v in sorted(result_info.items()))
        lines.append("")
    return "\n".join(lines)
