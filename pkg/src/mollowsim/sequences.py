"""
Declarative pulse programs.

A ``PulseSequence`` is an immutable list of piecewise-constant segments plus
framing: an optional (pi/2)_Y preparation pulse, an optional closing pi/2
pulse (used for Ramsey/FID-style readout) and a flag requesting an extra pi
pulse before readout.

Two timing modes are supported.  In ``"finite"`` mode every drive pulse lasts
``pi / omega_dd`` and the free windows are shortened so that pulse *centres*
sit at ``tau/2 + k*tau``.  In ``"ideal"`` mode drive pulses are applied as
instantaneous rotations at those centres and take no time; the free windows
are then exactly ``tau/2, tau, ..., tau, tau/2`` and the body lasts
``n_pi * tau``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

DRIVE = "DrivePulse"
SIGNAL = "SignalWindow"
IDLE = "Idle"
KINDS = (DRIVE, SIGNAL, IDLE)

LABEL_PHASES = {"X": 0.0, "Y": math.pi / 2, "-X": math.pi, "-Y": 3 * math.pi / 2}
NO_LABEL = "-"

PROTOCOL_PATTERNS = {
    "cpmg": ("X",),
    "xy4": ("X", "Y", "X", "Y"),
    "xy8": ("X", "Y", "X", "Y", "Y", "X", "Y", "X"),
    "xy8ps": ("X", "Y", "X", "Y", "Y", "X", "Y", "X"),
}

AREA_TOL = 1e-9
SPACING_RTOL = 1e-9


class SequenceError(ValueError):
    """A builder was asked for a sequence that cannot exist."""


@dataclass(frozen=True)
class PulseSegment:
    """One piecewise-constant piece of a pulse program.

    For drive pulses ``amplitude`` is the drive Rabi frequency and ``phase``
    the carrier phase fixed by ``label``.  For signal windows they are the
    signal Rabi frequency and carrier phase (including any phase-program
    offset).  Phases are quoted before any frame precession.
    """

    kind: str
    duration: float
    amplitude: float = 0.0
    phase: float = 0.0
    label: str = NO_LABEL

    @property
    def area(self) -> float:
        return self.amplitude * self.duration

    @property
    def is_drive(self) -> bool:
        return self.kind == DRIVE


def drive_pulse(area: float, omega_dd: float, label: str) -> PulseSegment:
    if omega_dd <= 0:
        raise SequenceError("drive amplitude must be positive")
    if label not in LABEL_PHASES:
        raise SequenceError(f"unknown pulse axis {label!r}")
    return PulseSegment(DRIVE, area / omega_dd, omega_dd, LABEL_PHASES[label], label)


@dataclass(frozen=True)
class TimedSegment:
    segment: PulseSegment
    start: float
    elapsed: float
    role: str  # "prep", "body", "closing"

    @property
    def center(self) -> float:
        return self.start + self.elapsed / 2


@dataclass(frozen=True)
class PulseSequence:
    protocol: str
    body: tuple
    tau: float = 0.0
    mode: str = "ideal"
    prep: Optional[PulseSegment] = None
    closing: Optional[PulseSegment] = None
    readout_flip: bool = False
    block: int = 1
    signal_phase: float = math.pi / 2
    nominal_delta: float = 0.0
    cw_signal: Optional[tuple] = None  # (omega_rf, phi_rf) concurrent with drive pulses
    metadata: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.mode not in ("ideal", "finite"):
            raise SequenceError(f"unknown pulse mode {self.mode!r}")
        object.__setattr__(self, "body", tuple(self.body))

    # -- derived quantities -------------------------------------------------
    def elapsed(self, seg: PulseSegment) -> float:
        """Wall-clock time a segment occupies (zero for ideal drive pulses)."""
        if seg.kind == DRIVE and self.mode == "ideal":
            return 0.0
        return seg.duration

    @property
    def drive_pulses(self) -> list:
        return [s for s in self.body if s.kind == DRIVE]

    @property
    def n_pi(self) -> int:
        return sum(1 for s in self.drive_pulses if abs(s.area - math.pi) <= AREA_TOL * math.pi)

    @property
    def axes(self) -> list:
        return [s.label for s in self.drive_pulses]

    @property
    def signal_windows(self) -> list:
        return [s for s in self.body if s.kind == SIGNAL]

    @property
    def signal_phase_program(self) -> list:
        return [s.phase - self.signal_phase for s in self.signal_windows]

    @property
    def body_duration(self) -> float:
        return math.fsum(self.elapsed(s) for s in self.body)

    @property
    def signal_time(self) -> float:
        """Total time the signal acts (drive-pulse time excluded)."""
        t = math.fsum(s.duration for s in self.signal_windows)
        if self.cw_signal is not None:
            t += math.fsum(s.duration for s in self.drive_pulses)
        return t

    @property
    def total_duration(self) -> float:
        parts = [self.body_duration]
        for seg in (self.prep, self.closing):
            if seg is not None:
                parts.append(self.elapsed(seg))
        return math.fsum(parts)

    def timeline(self) -> list:
        """Segments with absolute start times; t = 0 is the start of the program."""
        out = []
        t = 0.0
        framed = []
        if self.prep is not None:
            framed.append((self.prep, "prep"))
        framed.extend((s, "body") for s in self.body)
        if self.closing is not None:
            framed.append((self.closing, "closing"))
        for seg, role in framed:
            e = self.elapsed(seg)
            out.append(TimedSegment(seg, t, e, role))
            t += e
        return out

    @property
    def body_start(self) -> float:
        return self.elapsed(self.prep) if self.prep is not None else 0.0

    def pulse_centers(self) -> list:
        """Centres of body drive pulses, measured from the start of the body."""
        t0 = self.body_start
        return [ts.center - t0 for ts in self.timeline() if ts.role == "body" and ts.segment.kind == DRIVE]

    def with_signal(self, omega_rf: float, phi_rf: Optional[float] = None) -> "PulseSequence":
        """Copy with every signal window re-stamped to a new amplitude/base phase."""
        if omega_rf < 0:
            raise SequenceError("signal amplitude must be non-negative")
        base = self.signal_phase if phi_rf is None else float(phi_rf)
        program = self.signal_phase_program
        body = []
        k = 0
        for s in self.body:
            if s.kind == SIGNAL:
                body.append(replace(s, amplitude=float(omega_rf), phase=base + program[k]))
                k += 1
            else:
                body.append(s)
        cw = None if self.cw_signal is None else (float(omega_rf), base)
        return replace(self, body=tuple(body), signal_phase=base, cw_signal=cw)

    def with_readout_flip(self, flip: bool) -> "PulseSequence":
        return replace(self, readout_flip=bool(flip))


# -- builders ---------------------------------------------------------------

def _prep_pulse(omega_dd: float, label: str = "Y") -> PulseSegment:
    return drive_pulse(math.pi / 2, omega_dd, label)


def build_dd(
    axes: Sequence[str],
    tau: float,
    omega_dd: float,
    *,
    protocol: str = "custom",
    block: int = 1,
    omega_rf: float = 0.0,
    phi_rf: float = math.pi / 2,
    phase_offsets: Optional[Sequence[float]] = None,
    mode: str = "ideal",
    nominal_delta: float = 0.0,
) -> PulseSequence:
    """Equidistant pi-pulse train with tau/2 edge windows and signal in every gap."""
    axes = list(axes)
    n = len(axes)
    if n < 1:
        raise SequenceError("need at least one pi pulse")
    if omega_dd <= 0:
        raise SequenceError("drive amplitude must be positive")
    t_pi = math.pi / omega_dd
    if not tau > t_pi:
        raise SequenceError(f"pulse spacing {tau!r} s is not longer than the pi pulse ({t_pi!r} s)")
    if mode not in ("ideal", "finite"):
        raise SequenceError(f"unknown pulse mode {mode!r}")
    shrink = t_pi if mode == "finite" else 0.0
    windows = [tau / 2 - shrink / 2] + [tau - shrink] * (n - 1) + [tau / 2 - shrink / 2]
    if phase_offsets is None:
        phase_offsets = [0.0] * (n + 1)
    if len(phase_offsets) != n + 1:
        raise SequenceError("phase program needs one entry per signal window")
    body = []
    for k, w in enumerate(windows):
        body.append(PulseSegment(SIGNAL, w, float(omega_rf), phi_rf + phase_offsets[k]))
        if k < n:
            body.append(drive_pulse(math.pi, omega_dd, axes[k]))
    return PulseSequence(
        protocol=protocol,
        body=tuple(body),
        tau=float(tau),
        mode=mode,
        prep=_prep_pulse(omega_dd),
        block=block,
        signal_phase=phi_rf,
        nominal_delta=nominal_delta,
    )


def build_cpmg(n_pi: int, tau: float, omega_dd: float, **kw) -> PulseSequence:
    """CPMG train: ``n_pi`` X pulses, resonance at pi/tau."""
    return build_dd(["X"] * int(n_pi), tau, omega_dd, protocol="cpmg", block=1,
                    nominal_delta=math.pi / tau, **kw)


def build_xy4(n_blocks: int, tau: float, omega_dd: float, **kw) -> PulseSequence:
    if n_blocks < 1:
        raise SequenceError("need at least one XY4 block")
    return build_dd(list(PROTOCOL_PATTERNS["xy4"]) * int(n_blocks), tau, omega_dd, protocol="xy4",
                    block=4, nominal_delta=math.pi / (2 * tau), **kw)


def sign_pattern(axes: Iterable[str]) -> list:
    """Sensitivity sign in each gap of a pulse train: flips at X-type pulses only."""
    s = 1
    out = [s]
    for a in axes:
        if a in ("X", "-X"):
            s = -s
        elif a not in ("Y", "-Y"):
            raise SequenceError(f"cannot assign a sensitivity sign across axis {a!r}")
        out.append(s)
    return out


def phase_switching_program(axes: Sequence[str]) -> list:
    """Signal phase offsets that keep every window's toggling-frame contribution positive.

    Offset 0 where the sensitivity sign is +1 and pi where it is -1.
    """
    return [0.0 if s > 0 else math.pi for s in sign_pattern(axes)]


def build_xy8(n_blocks: int, tau: float, omega_dd: float, phase_switching: bool = False, **kw) -> PulseSequence:
    if n_blocks < 1:
        raise SequenceError("need at least one XY8 block")
    axes = list(PROTOCOL_PATTERNS["xy8"]) * int(n_blocks)
    if phase_switching:
        return build_dd(axes, tau, omega_dd, protocol="xy8ps", block=8,
                        phase_offsets=phase_switching_program(axes), nominal_delta=0.0, **kw)
    return build_dd(axes, tau, omega_dd, protocol="xy8", block=8, nominal_delta=math.pi / (2 * tau), **kw)


def build_protocol(protocol: str, n_pi: int, tau: float, omega_dd: float, **kw) -> PulseSequence:
    """Dispatch by protocol name with the pulse count given in pi pulses."""
    protocol = protocol.lower()
    if protocol == "cpmg":
        return build_cpmg(n_pi, tau, omega_dd, **kw)
    block = len(PROTOCOL_PATTERNS.get(protocol, ()))
    if block == 0:
        raise SequenceError(f"unknown protocol {protocol!r}")
    if n_pi % block:
        raise SequenceError(f"{protocol} needs a multiple of {block} pi pulses, got {n_pi}")
    if protocol == "xy4":
        return build_xy4(n_pi // 4, tau, omega_dd, **kw)
    return build_xy8(n_pi // 8, tau, omega_dd, phase_switching=(protocol == "xy8ps"), **kw)


def build_cw_sideband(
    duration: float,
    omega_dd: float,
    omega_rf: float,
    delta: float,
    *,
    phi_rf: float = math.pi / 2,
    prep_axis: str = "Y",
    turns_of: int = 1,
) -> PulseSequence:
    """Continuous drive along X with a concurrent weak signal.

    The drive length is rounded to the nearest whole multiple of ``turns_of``
    pi rotations (at least one).  The closing pulse undoes the preparation, so
    the readout measures the projection on the prepared dressed state.
    ``delta`` is the intended signal detuning and is only recorded; the
    detuning actually simulated comes from the frame.
    """
    if omega_dd <= 0:
        raise SequenceError("CW protocol needs a non-zero drive")
    if omega_rf < 0:
        raise SequenceError("signal amplitude must be non-negative")
    if prep_axis not in ("X", "Y"):
        raise SequenceError("CW preparation axis must be X or Y")
    t_pi = math.pi / omega_dd
    m = turns_of * max(1, round(duration / (turns_of * t_pi)))
    seg = PulseSegment(DRIVE, m * t_pi, omega_dd, LABEL_PHASES["X"], "X")
    return PulseSequence(
        protocol="cw",
        body=(seg,),
        mode="finite",
        prep=_prep_pulse(omega_dd, prep_axis),
        closing=_prep_pulse(omega_dd, "-" + prep_axis),
        signal_phase=phi_rf,
        nominal_delta=float(delta),
        cw_signal=(float(omega_rf), float(phi_rf)),
        metadata=(("requested_duration", float(duration)), ("pi_rotations", m)),
    )


def build_cw_central(duration: float, omega_dd: float, omega_rf: float) -> PulseSequence:
    """Central-line variant: signal in phase with the drive, spin prepared orthogonally.

    The prepared state is not an eigenstate of the drive, so the drive is cut
    to whole 2 pi turns to hand it back unchanged at readout.
    """
    return build_cw_sideband(duration, omega_dd, omega_rf, 0.0, phi_rf=0.0, prep_axis="X", turns_of=2)


def build_fid(t_free: float, omega_dd: float = 2 * math.pi * 25e6, mode: str = "ideal") -> PulseSequence:
    """Ramsey-type free induction decay: (pi/2)_Y, free evolution, (pi/2)_-Y."""
    if t_free < 0:
        raise SequenceError("free evolution time must be non-negative")
    body = (PulseSegment(IDLE, float(t_free)),) if t_free > 0 else ()
    return PulseSequence(
        protocol="fid",
        body=body,
        mode=mode,
        prep=_prep_pulse(omega_dd, "Y"),
        closing=_prep_pulse(omega_dd, "-Y"),
    )


# -- validation -------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    index: int  # body segment index, -1 for sequence-level rules
    rule: str
    message: str
    advisory: bool = False

    def __str__(self):
        where = "sequence" if self.index < 0 else f"segment {self.index}"
        tag = " (advisory)" if self.advisory else ""
        return f"{where}: {self.rule}{tag}: {self.message}"


def _close(a: float, b: float, rtol: float = SPACING_RTOL) -> bool:
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300)


def validate(seq: PulseSequence) -> list:
    """Check a sequence against its structural invariants.

    Returns a list of ``Violation`` objects; an empty list means the sequence
    is well formed.  Violations flagged ``advisory`` describe sequences that
    are physically valid but need extra assumptions (signal phase control).
    """
    out = []
    for i, s in enumerate(seq.body):
        if s.kind not in KINDS:
            out.append(Violation(i, "kind", f"unknown segment kind {s.kind!r}"))
            continue
        if not s.duration > 0:
            out.append(Violation(i, "duration", f"duration {s.duration!r} is not positive"))
        if s.kind == DRIVE:
            if s.label not in LABEL_PHASES:
                out.append(Violation(i, "label", f"drive pulse without axis label ({s.label!r})"))
            elif abs(math.remainder(s.phase - LABEL_PHASES[s.label], 2 * math.pi)) > 1e-12:
                out.append(Violation(i, "label", f"phase {s.phase!r} does not match axis {s.label}"))
            if seq.cw_signal is not None:
                m = s.area / math.pi
                if abs(m - round(m)) > AREA_TOL or round(m) < 1:
                    out.append(Violation(i, "area", f"CW drive area {s.area!r} is not a multiple of pi"))
            elif abs(s.area - math.pi) > AREA_TOL * math.pi:
                out.append(Violation(i, "area", f"pulse area {s.area!r} differs from pi"))
    if seq.prep is not None and abs(seq.prep.area - math.pi / 2) > AREA_TOL:
        out.append(Violation(-1, "prep", f"preparation area {seq.prep.area!r} differs from pi/2"))
    if seq.closing is not None and abs(seq.closing.area - math.pi / 2) > AREA_TOL:
        out.append(Violation(-1, "closing", f"closing pulse area {seq.closing.area!r} differs from pi/2"))

    if seq.cw_signal is None and seq.tau > 0 and seq.drive_pulses:
        out.extend(_spacing_violations(seq))
        if seq.n_pi % max(seq.block, 1):
            out.append(Violation(-1, "block", f"{seq.n_pi} pi pulses is not a multiple of block size {seq.block}"))
    return out


def _spacing_violations(seq: PulseSequence) -> list:
    out = []
    tau = seq.tau
    tl = [ts for ts in seq.timeline() if ts.role == "body"]
    t0 = seq.body_start
    centers = [(i, ts.center - t0) for i, ts in enumerate(tl) if ts.segment.kind == DRIVE]
    end = seq.body_duration
    idx = [i for i, _ in centers]
    times = [c for _, c in centers]
    if not _close(times[0], tau / 2):
        out.append(Violation(idx[0], "spacing", f"first pulse at {times[0]!r} s, expected tau/2"))
    for k in range(1, len(times)):
        gap = times[k] - times[k - 1]
        if not _close(gap, tau):
            out.append(Violation(idx[k], "spacing", f"pulse gap {gap!r} s differs from tau = {tau!r} s"))
    if not _close(end - times[-1], tau / 2):
        out.append(Violation(idx[-1], "spacing", f"last pulse {end - times[-1]!r} s before end, expected tau/2"))

    # pulses orthogonal to the signal must be equally spaced unless the signal phase is programmed
    has_program = any(abs(o) > 0 for o in seq.signal_phase_program)
    if not has_program:
        xs = [t for t, a in zip(times, seq.axes) if a in ("X", "-X")]
        gaps = [b - a for a, b in zip(xs, xs[1:])]
        if gaps and not all(_close(g, gaps[0]) for g in gaps):
            out.append(Violation(
                -1, "orthogonal-spacing",
                "X-axis pulses are not equally spaced; this protocol needs signal phase switching",
                advisory=True,
            ))
    return out


def hard_violations(violations: Iterable[Violation]) -> list:
    return [v for v in violations if not v.advisory]


# -- text format ------------------------------------------------------------
# one segment per line: kind duration_s amplitude_rad_s phase_rad label
# sequence-level fields travel in "#@ key value" header lines

_HEADER_FLOATS = ("tau", "signal_phase", "nominal_delta")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _seg_line(s: PulseSegment) -> str:
    return f"{s.kind} {_fmt(s.duration)} {_fmt(s.amplitude)} {_fmt(s.phase)} {s.label}"


def dumps(seq: PulseSequence) -> str:
    lines = [
        "# pulse program: kind duration_s amplitude_rad_s phase_rad label",
        f"#@ protocol {seq.protocol}",
        f"#@ mode {seq.mode}",
        f"#@ block {seq.block}",
        f"#@ readout_flip {int(seq.readout_flip)}",
    ]
    lines += [f"#@ {k} {_fmt(getattr(seq, k))}" for k in _HEADER_FLOATS]
    if seq.cw_signal is not None:
        lines.append(f"#@ cw_signal {_fmt(seq.cw_signal[0])} {_fmt(seq.cw_signal[1])}")
    if seq.prep is not None:
        lines.append("#@ prep " + _seg_line(seq.prep))
    if seq.closing is not None:
        lines.append("#@ closing " + _seg_line(seq.closing))
    lines += [_seg_line(s) for s in seq.body]
    return "\n".join(lines) + "\n"


def _parse_seg(fields: list, lineno: int) -> PulseSegment:
    if len(fields) != 5:
        raise SequenceError(f"line {lineno}: expected 5 fields, got {len(fields)}")
    kind, dur, amp, ph, label = fields
    if kind not in KINDS:
        raise SequenceError(f"line {lineno}: unknown segment kind {kind!r}")
    try:
        return PulseSegment(kind, float(dur), float(amp), float(ph), label)
    except ValueError as exc:
        raise SequenceError(f"line {lineno}: {exc}") from None


def loads(text: str) -> PulseSequence:
    header = {}
    body = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#@"):
            key, _, rest = line[2:].strip().partition(" ")
            header[key] = (rest.split(), lineno)
            continue
        if line.startswith("#"):
            continue
        body.append(_parse_seg(line.split(), lineno))

    def get(key, default=None):
        return header[key][0] if key in header else default

    kw = dict(
        protocol=get("protocol", ["custom"])[0],
        mode=get("mode", ["ideal"])[0],
        block=int(get("block", ["1"])[0]),
        readout_flip=bool(int(get("readout_flip", ["0"])[0])),
    )
    for k in _HEADER_FLOATS:
        if k in header:
            kw[k] = float(header[k][0][0])
    if "cw_signal" in header:
        a, p = header["cw_signal"][0]
        kw["cw_signal"] = (float(a), float(p))
    for k in ("prep", "closing"):
        if k in header:
            kw[k] = _parse_seg(*header[k])
    return PulseSequence(body=tuple(body), **kw)


def write_sequence(seq: PulseSequence, path) -> None:
    Path(path).write_text(dumps(seq), encoding="ascii")


def read_sequence(path) -> PulseSequence:
    return loads(Path(path).read_text(encoding="ascii"))
