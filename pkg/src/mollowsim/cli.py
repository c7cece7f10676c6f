"""
Command-line front end.

    mollowsim run <config.ini>
    mollowsim preset <name> [--out DIR] [--dump]
    mollowsim list

Exit status: 0 success, 2 configuration error, 3 sequence validation error,
4 numerical failure.  ``MOLLOWSIM_OUT`` overrides the output directory of the
configuration; ``--out`` overrides both.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import OUT_ENV, ConfigError, RunConfig, parse_config, snapshot_text
from .dephasing import DephasingModel, fid_spectrum
from .frames import FrameConfig
from .presets import listing, preset_text
from .sequences import SequenceError, hard_violations, validate
from .spincore import NumericalDriftError

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3, 4


def _spec(cfg: RunConfig, protocol: str = None, **kw) -> ex.SequenceSpec:
    base = dict(protocol=protocol or cfg.protocol, n_pi=cfg.n_pi, tau=cfg.tau, omega_rf=cfg.omega_rf,
                phi_rf=cfg.phi_rf, omega_dd=cfg.omega_dd, mode=cfg.mode, pulse_model=cfg.pulse_model)
    base.update(kw)
    return ex.SequenceSpec(**base)


def _model(cfg: RunConfig):
    return DephasingModel(cfg.sigma_f, cfg.nodes) if cfg.sigma_f > 0 else None


def _check(spec: ex.SequenceSpec, **kw) -> None:
    """Build once and refuse programs that break a hard invariant."""
    bad = hard_violations(validate(spec.build(**kw)))
    if bad:
        raise SequenceError("; ".join(map(str, bad)))


# Each runner returns (outputs, summary line, result info); outputs are
# (file suffix, writer) pairs and nothing is written until all runners succeed.

def _run_scan_delta(cfg):
    spec = _spec(cfg)
    _check(spec)
    r = ex.scan_delta(spec, cfg.delta_grid.values(), _model(cfg))
    pos = ex.resonance_position(r.grid1, r.values)
    return [("", r)], f"resonance at Delta = {pos:.6g} rad/s (Delta tau / pi = {pos * cfg.tau / math.pi:.4f})", \
        {"resonance_rad_s": repr(pos)}


def _run_compare(cfg):
    outs, parts, info = [], [], {}
    for p in cfg.protocols:
        spec = _spec(cfg, p)
        _check(spec)
        r = ex.scan_delta(spec, cfg.delta_grid.values(), _model(cfg))
        pos = ex.resonance_position(r.grid1, r.values)
        outs.append((f"_{p}", r))
        parts.append(f"{p}: {pos * cfg.tau / math.pi:.3f}")
        info[f"{p}_resonance_rad_s"] = repr(pos)
    return outs, "strongest response at Delta tau / pi = " + ", ".join(parts), info


def _run_scan_map(cfg):
    spec = _spec(cfg)
    taus = cfg.tau_grid.values()
    for t in (taus[0], taus[-1]):
        _check(spec, tau=float(t))
    r = ex.scan_map(spec, taus, cfg.delta_grid.values(), _model(cfg), workers=cfg.workers)
    res = ex.ridge(r)
    product = res * taus / math.pi
    ridge = ex.ScanResult("tau_s", taus, res, kind="derived", metadata={"quantity": "resonance_rad_s"})
    return [("", r), ("_ridge", ridge)], \
        f"ridge Delta tau / pi between {product.min():.4f} and {product.max():.4f}", \
        {"ridge_min": repr(float(product.min())), "ridge_max": repr(float(product.max()))}


def _trace_summary(spec, r):
    w = ex.rabi_fit_of(r)
    ratio = w / spec.omega_rf if spec.omega_rf > 0 else float("nan")
    return w, ratio


def _run_rabi_trace(cfg):
    spec = _spec(cfg)
    _check(spec, n_pi=cfg.n_grid[-1])
    r = ex.rabi_trace(spec, cfg.n_grid, cfg.delta, _model(cfg), workers=cfg.workers)
    w, ratio = _trace_summary(spec, r)
    return [("", r)], f"fitted Omega_eff = {w:.6g} rad/s, Omega_eff / Omega_rf = {ratio:.4f}", \
        {"omega_eff_rad_s": repr(w), "omega_eff_over_omega_rf": repr(ratio)}


def _run_rabi_factors(cfg):
    outs, parts, info = [], [], {}
    for p in cfg.protocols:
        spec = _spec(cfg, p)
        _check(spec, n_pi=cfg.n_grid[-1])
        r = ex.rabi_trace(spec, cfg.n_grid, None, _model(cfg), workers=cfg.workers)
        w, ratio = _trace_summary(spec, r)
        outs.append((f"_{p}", r))
        parts.append(f"{p}: {ratio:.4f}")
        info[f"{p}_omega_eff_over_omega_rf"] = repr(ratio)
    return outs, "Omega_eff / Omega_rf = " + ", ".join(parts), info


def _run_linewidth(cfg):
    spec = _spec(cfg)
    _check(spec, n_pi=cfg.n_grid[-1])
    model = _model(cfg)
    r = ex.linewidth_vs_T(spec, cfg.n_grid, model, workers=cfg.workers)
    c = ex.bandwidth_constant(r)
    line = f"FWHM = c / T with c = {c / math.pi:.4f} pi"
    info = {"bandwidth_c_over_pi": repr(c / math.pi)}
    if model is not None:
        ref = 2 * math.pi * model.fwhm_hz
        long_ = r.grid1 > model.t2star()
        below = int(np.sum(r.values[long_] < ref))
        line += f"; {below} of {int(long_.sum())} sequences longer than T2* are narrower than 1/T2*"
        info["narrower_than_t2star"] = f"{below}/{int(long_.sum())}"
    return [("", r)], line, info


def _run_breakdown(cfg):
    spec = _spec(cfg)
    taus = cfg.tau_grid.values()
    for t in (taus[0], taus[-1]):
        _check(spec, tau=float(t))
    model = _model(cfg)
    r = ex.breakdown_vs_tau(spec, taus, model, rotation=cfg.rotation, workers=cfg.workers)
    x = ex.falling_crossing(taus, r.values)
    t2 = model.t2star()
    return [("", r)], f"response halves at tau = {x:.4g} s = {x / t2:.3f} T2*", \
        {"half_response_tau_s": repr(x), "half_response_over_t2star": repr(x / t2)}


def _run_fid(cfg):
    model = _model(cfg)
    spec = fid_spectrum(cfg.t_max, cfg.dt, model, FrameConfig(0.0, 0.0), omega_dd=cfg.omega_dd)
    t2 = model.t2star()
    outs = [("_trace", spec.write_trace_csv), ("_spectrum", spec.write_spectrum_csv)]
    return outs, f"FID spectrum FWHM = {spec.fwhm_hz:.6g} Hz ({spec.fwhm_hz * t2:.4f} / T2*)", \
        {"fwhm_Hz": repr(spec.fwhm_hz), "nodes_used": spec.nodes_used}


def _run_cw_trace(cfg):
    delta = cfg.delta if cfg.delta is not None else cfg.omega_dd
    r = ex.cw_trace(cfg.omega_dd, cfg.omega_rf, cfg.duration_grid.values(), delta, central=cfg.central,
                    workers=cfg.workers)
    try:
        w = ex.fit_rabi(r.grid1, r.values).omega
    except ValueError:
        w = float("nan")
    ratio = w / cfg.omega_rf if cfg.omega_rf > 0 else float("nan")
    return [("", r)], f"CW oscillation at {w:.6g} rad/s = {ratio:.4f} Omega_rf", \
        {"omega_fit_rad_s": repr(w), "omega_fit_over_omega_rf": repr(ratio)}


RUNNERS = {
    "scan_delta": _run_scan_delta,
    "compare": _run_compare,
    "scan_map": _run_scan_map,
    "rabi_trace": _run_rabi_trace,
    "rabi_factors": _run_rabi_factors,
    "linewidth": _run_linewidth,
    "breakdown": _run_breakdown,
    "fid": _run_fid,
    "cw_trace": _run_cw_trace,
}


def execute(cfg: RunConfig, out_dir: str = None) -> tuple:
    """Run an experiment and write its files; returns (written paths, summary)."""
    outputs, summary, info = RUNNERS[cfg.experiment](cfg)
    target = Path(out_dir or cfg.out_dir)
    target.mkdir(parents=True, exist_ok=True)
    # stage everything, then move into place, so a failure leaves nothing behind
    written = []
    with tempfile.TemporaryDirectory(dir=target) as stage:
        staged = []
        for suffix, item in outputs:
            name = f"{cfg.name}{suffix}.csv"
            (item.to_csv if isinstance(item, ex.ScanResult) else item)(os.path.join(stage, name))
            staged.append(name)
        meta = f"{cfg.name}.meta"
        Path(stage, meta).write_text(snapshot_text(cfg, {"summary": summary, **info}))
        staged.append(meta)
        for name in staged:
            os.replace(os.path.join(stage, name), target / name)
            written.append(target / name)
    return written, summary


def run_text(text: str, out_dir: str = None) -> tuple:
    return execute(parse_config(text), out_dir)


def _guarded(fn) -> int:
    try:
        written, summary = fn()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SequenceError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalDriftError, ArithmeticError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # grid or quadrature problems surfaced by the numerics layer
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(summary)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mollowsim", description="Pulsed Mollow absorption simulator")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment from a configuration file")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides config and $" + OUT_ENV + ")")
    pr = sub.add_parser("preset", help="run a figure preset")
    pr.add_argument("name")
    pr.add_argument("--out", help="output directory (overrides $" + OUT_ENV + ")")
    pr.add_argument("--dump", action="store_true", help="print the preset configuration and exit")
    sub.add_parser("list", help="list figure presets")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        print(listing())
        return EXIT_OK
    if args.command == "preset":
        try:
            text = preset_text(args.name)
        except KeyError:
            print(f"config error: no preset named {args.name!r}", file=sys.stderr)
            return EXIT_CONFIG
        if args.dump:
            print(text)
            return EXIT_OK
        return _guarded(lambda: run_text(text, args.out))
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return _guarded(lambda: run_text(text, args.out))


if __name__ == "__main__":
    sys.exit(main())
