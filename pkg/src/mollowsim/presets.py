"""
Ready-made configurations, one per reproduced figure panel.

The weak signal of the protocol-comparison panels is 1.5e6 rad/s, hence the
``omega_rf_rad_s`` keys there; everything else is given in plain Hz.
"""

from __future__ import annotations

PRESETS = {
    "fig2a": ("CW sideband absorption, dressed-state flip at Delta = +Omega_dd", """
[run]
experiment = cw_trace
name = fig2a
[sequence]
omega_dd_Hz = 5e6
omega_rf_Hz = 0.25e6
delta_Hz = 5e6
central = false
[grid]
duration_start_s = 0.1e-6
duration_stop_s = 8e-6
duration_count = 80
"""),
    "fig2b": ("CW central-line absorption, signal in phase with the drive at Delta = 0", """
[run]
experiment = cw_trace
name = fig2b
[sequence]
omega_dd_Hz = 5e6
omega_rf_Hz = 0.25e6
delta_Hz = 0
central = true
[grid]
duration_start_s = 0.2e-6
duration_stop_s = 8e-6
duration_count = 40
"""),
    "fig3b": ("Simulated (tau, Delta) resonance map, CPMG with n = 4 cycles (8 pi pulses)", """
[run]
experiment = scan_map
name = fig3b
[sequence]
protocol = cpmg
n_pi = 8
omega_dd_Hz = 50e6
omega_rf_rad_s = 1e5
phi_rf = auto
[grid]
tau_start_s = 20e-9
tau_stop_s = 200e-9
tau_count = 91
delta_start_Hz = 0
delta_stop_Hz = 30e6
delta_count = 301
"""),
    "fig3c": ("CPMG linewidth against sequence length with T2* = 1.8 us", """
[run]
experiment = linewidth
name = fig3c
[sequence]
protocol = cpmg
tau_s = 43.6e-9
omega_rf_rad_s = 1e4
[grid]
n_list = 8 16 32 48 64 96 128
[dephasing]
t2star_s = 1.8e-6
convention = fwhm
"""),
    "fig3d": ("Spectral response of CPMG, XY4, XY8 and phase-switched XY8 (24 pi, tau = 43.6 ns)", """
[run]
experiment = compare
name = fig3d
[sequence]
protocols = cpmg, xy4, xy8, xy8ps
n_pi = 24
tau_s = 43.6e-9
omega_rf_rad_s = 1.5e6
[grid]
delta_start_Hz = 0
delta_stop_Hz = 22.93577981651376e6
delta_count = 201
"""),
    "fig4b": ("Slow Rabi oscillation, phase-switched XY8 at Delta = 0, up to 120 pi pulses", """
[run]
experiment = rabi_trace
name = fig4b
[sequence]
protocol = xy8ps
tau_s = 0.5e-6
omega_rf_Hz = 16.6667e3
delta_Hz = 0
[grid]
n_start = 8
n_stop = 120
n_step = 8
"""),
    "fig4c": ("Sensitivity breakdown against pulse spacing for T2* = 1.8 us (phase-switched XY8)", """
[run]
experiment = breakdown
name = fig4c
[sequence]
protocol = xy8ps
n_pi = 24
[grid]
tau_start_s = 50e-9
tau_stop_s = 8e-6
tau_count = 31
tau_spacing = log
[dephasing]
t2star_s = 1.8e-6
convention = fwhm
"""),
    "s1": ("Free induction decay and its spectrum for T2* = 1.8 us", """
[run]
experiment = fid
name = s1
[grid]
t_max_s = 9e-6
dt_s = 40e-9
[dephasing]
t2star_s = 1.8e-6
convention = fwhm
"""),
    "s3b": ("Effective Rabi frequencies of the four protocols on their resonances", """
[run]
experiment = rabi_factors
name = s3b
[sequence]
protocols = cpmg, xy4, xy8, xy8ps
n_pi = 24
tau_s = 43.6e-9
omega_rf_rad_s = 1.5e6
[grid]
n_start = 24
n_stop = 480
n_step = 24
"""),
    "s3c": ("XY4 Rabi oscillation along the hyperbola Delta = pi/(2 tau)", """
[run]
experiment = rabi_trace
name = s3c
[sequence]
protocol = xy4
tau_s = 43.6e-9
omega_rf_rad_s = 1.5e6
[grid]
n_start = 8
n_stop = 480
n_step = 8
"""),
}

ALIASES = {"figure3d": "fig3d", "fid": "s1"}


def preset_text(name: str) -> str:
    key = ALIASES.get(name, name)
    if key not in PRESETS:
        raise KeyError(name)
    return PRESETS[key][1].lstrip()


def listing() -> str:
    width = max(map(len, PRESETS))
    rows = [f"{name:<{width}}  {desc}" for name, (desc, _) in PRESETS.items()]
    rows += [f"{alias:<{width}}  alias of {target}" for alias, target in ALIASES.items()]
    return "\n".join(rows)
