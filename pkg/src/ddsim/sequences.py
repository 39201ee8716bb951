"""Pulse timelines for dynamical-decoupling sequences.

A :class:`Timeline` is an ordered list of free-evolution delays and pi-pulse
specifications together with cycle metadata.  Builders cover the standard
families: Hahn echo, CP/CPMG, Uhrig (UDD), XY-4/8/16, concatenated (CDD,
standard and symmetrized) and the Knill-composite KDD cycle, plus wrapping of
every pulse into a five-pulse robust composite.

Times are abstract units (the scenario layer binds microseconds).  Pulse
phases are stored canonically in degrees so the line-oriented text form
round-trips losslessly; the ``phase`` property exposes radians.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from dataclasses import dataclass, replace

__all__ = [
    "PulseSpec",
    "Delay",
    "Pulse",
    "Timeline",
    "SequenceStats",
    "udd_times",
    "build_basic",
    "concatenate_cdd",
    "build_kdd",
    "compose_xy",
    "wrap_robust_pulses",
    "repeat",
    "stats",
    "is_reflection_symmetric",
    "to_text",
    "from_text",
    "to_dict",
    "from_dict",
    "make_sequence",
]


@dataclass(frozen=True)
class PulseSpec:
    """One nominal rotation: in-plane phase and flip angle, both in degrees.

    The rotation axis is (cos phase, sin phase, 0).  Phases are folded into
    [0, 360).  Degrees are the canonical storage so serialized timelines
    parse back bit-exactly; use :meth:`from_radians` / :attr:`phase` to work
    in radians.
    """

    phase_deg: float = 0.0
    flip_deg: float = 180.0

    def __post_init__(self):
        if not self.flip_deg > 0:
            raise ValueError("flip angle must be positive")
        if not math.isfinite(self.phase_deg):
            raise ValueError("pulse phase must be finite")
        object.__setattr__(self, "phase_deg", self.phase_deg % 360.0)

    @classmethod
    def from_radians(cls, phase: float, flip: float = math.pi) -> "PulseSpec":
        return cls(math.degrees(phase), math.degrees(flip))

    @property
    def phase(self) -> float:
        """Phase in radians."""
        return math.radians(self.phase_deg)

    @property
    def flip(self) -> float:
        """Nominal flip angle in radians."""
        return math.radians(self.flip_deg)

    @property
    def is_pi(self) -> bool:
        return abs(self.flip_deg - 180.0) < 1e-9

    def shifted(self, delta_deg: float) -> "PulseSpec":
        return PulseSpec(self.phase_deg + delta_deg, self.flip_deg)


X_PULSE = PulseSpec(0.0)
Y_PULSE = PulseSpec(90.0)


@dataclass(frozen=True)
class Delay:
    duration: float

    def __post_init__(self):
        if not (math.isfinite(self.duration) and self.duration >= 0):
            raise ValueError("delay duration must be finite and >= 0")


@dataclass(frozen=True)
class Pulse:
    spec: PulseSpec


@dataclass(frozen=True)
class Timeline:
    """Normalized event list plus cycle bookkeeping.

    Invariants: adjacent delays are merged and zero delays dropped;
    ``pulses_per_cycle * cycles`` equals the total pulse count;
    ``cycle_time * cycles`` equals the summed delay time.
    """

    events: tuple
    cycle_time: float
    pulses_per_cycle: int
    cycles: int = 1
    logical_pulses_per_cycle: int | None = None

    @property
    def pulse_count(self) -> int:
        return sum(1 for e in self.events if isinstance(e, Pulse))

    @property
    def duration(self) -> float:
        return sum(e.duration for e in self.events if isinstance(e, Delay))

    @property
    def pulses(self) -> tuple:
        return tuple(e.spec for e in self.events if isinstance(e, Pulse))

    @property
    def pulse_times(self) -> tuple:
        """Instant of each pulse (instantaneous-pulse convention)."""
        out, t = [], 0.0
        for e in self.events:
            if isinstance(e, Delay):
                t += e.duration
            else:
                out.append(t)
        return tuple(out)

    def delay_vector(self) -> tuple:
        """Canonical alternating form: delays d0, p1, d1, ..., pn, dn.

        Returns the n+1 delays (zero where pulses are adjacent or sit at the
        timeline boundary).
        """
        out = [0.0]
        for e in self.events:
            if isinstance(e, Delay):
                out[-1] += e.duration
            else:
                out.append(0.0)
        return tuple(out)

    def reversed(self) -> "Timeline":
        """Time-reversed event list (same delays and phases, reverse order)."""
        return replace(self, events=_normalize(tuple(reversed(self.events))))

    def phase_shifted(self, delta_deg: float) -> "Timeline":
        ev = tuple(
            Pulse(e.spec.shifted(delta_deg)) if isinstance(e, Pulse) else e
            for e in self.events
        )
        return replace(self, events=ev)


@dataclass(frozen=True)
class SequenceStats:
    pulse_count: int
    cycle_time: float
    duty_cycle: float
    logical_pulse_count: int


def _normalize(events) -> tuple:
    out = []
    for e in events:
        if isinstance(e, Delay):
            if e.duration == 0.0:
                continue
            if out and isinstance(out[-1], Delay):
                out[-1] = Delay(out[-1].duration + e.duration)
                continue
        out.append(e)
    return tuple(out)


def _timeline(events, cycle_time, pulses_per_cycle, cycles=1) -> Timeline:
    return Timeline(_normalize(events), cycle_time, pulses_per_cycle, cycles)


def repeat(cycle_events, cycle_time, pulses_per_cycle, cycles) -> Timeline:
    """Tile one cycle's events; boundary delays merge on normalization."""
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    return _timeline(tuple(cycle_events) * cycles, cycle_time, pulses_per_cycle, cycles)


def udd_times(n_pulses: int, cycle_time: float) -> list:
    """Uhrig pulse instants t_i = cycle_time * sin^2(pi i / (2 (N + 1))).

    The rational points of the timing function (i/(N+1) of 1/3, 1/2, 2/3,
    where sin^2 is exactly 1/4, 1/2, 3/4) are evaluated exactly, so e.g. the
    two-pulse cycle reproduces the CPMG instants bit-for-bit.
    """
    if n_pulses < 1:
        raise ValueError("UDD needs at least one pulse")
    if not cycle_time > 0:
        raise ValueError("cycle time must be positive")
    exact = {Fraction(1, 3): 0.25, Fraction(1, 2): 0.5, Fraction(2, 3): 0.75}
    out = []
    for i in range(1, n_pulses + 1):
        frac = exact.get(Fraction(i, n_pulses + 1))
        if frac is not None:
            out.append(cycle_time * frac)
        else:
            out.append(cycle_time * math.sin(math.pi * i / (2.0 * (n_pulses + 1))) ** 2)
    return out


def build_basic(kind: str, tau: float, cycles: int = 1, order: int | None = None) -> Timeline:
    """Single-axis and XY-4 cycles.

    kind is one of ``hahn``, ``cp``, ``cpmg``, ``udd`` (requires ``order``),
    ``xy4_sym``, ``xy4_asym``.  ``tau`` is the inter-pulse delay except for
    ``udd``, where it is the cycle time.

    Conventions: one cpmg cycle is D(tau/2) Y D(tau) Y D(tau/2); cp is the
    same timeline with the pulse phase shifted by 90 degrees (x pulses);
    xy4_sym carries half-delays at the cycle edges (echoes in the window
    centers) while xy4_asym is delay-then-pulse four times (echoes on every
    second pulse).
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    if kind == "hahn":
        ev = (Delay(tau), Pulse(X_PULSE), Delay(tau))
        return repeat(ev, 2 * tau, 1, cycles)
    if kind in ("cp", "cpmg"):
        spec = Y_PULSE if kind == "cpmg" else X_PULSE
        ev = (Delay(tau / 2), Pulse(spec), Delay(tau), Pulse(spec), Delay(tau / 2))
        return repeat(ev, 2 * tau, 2, cycles)
    if kind == "udd":
        if order is None or order < 1:
            raise ValueError("udd requires order >= 1")
        times = udd_times(order, tau)
        ev, prev = [], 0.0
        for t in times:
            ev += [Delay(t - prev), Pulse(Y_PULSE)]
            prev = t
        ev.append(Delay(tau - prev))
        return repeat(tuple(ev), tau, order, cycles)
    if kind == "xy4_sym":
        ev = (
            Delay(tau / 2), Pulse(X_PULSE), Delay(tau), Pulse(Y_PULSE),
            Delay(tau), Pulse(X_PULSE), Delay(tau), Pulse(Y_PULSE), Delay(tau / 2),
        )
        return repeat(ev, 4 * tau, 4, cycles)
    if kind == "xy4_asym":
        ev = (
            Delay(tau), Pulse(X_PULSE), Delay(tau), Pulse(Y_PULSE),
            Delay(tau), Pulse(X_PULSE), Delay(tau), Pulse(Y_PULSE),
        )
        return repeat(ev, 4 * tau, 4, cycles)
    raise ValueError(f"unknown sequence kind {kind!r}")


def concatenate_cdd(order: int, tau: float, scheme: str = "standard", cycles: int = 1) -> Timeline:
    """Concatenated decoupling of the given order.

    standard: C_n = C_{n-1} X C_{n-1} Y C_{n-1} X C_{n-1} Y in time order,
    with C_0 a bare delay; order 1 is the asymmetric XY-4 and the pulse count
    follows P_n = 4 P_{n-1} + 4.

    symmetric: each level is [half - X - block - Y - half] applied twice,
    where ``half`` is the first half (by duration) of the previous level's
    block; order 1 is the symmetric XY-4.  The output is reflection
    symmetric and keeps the 4, 20, 84, ... pulse counts.
    """
    if order < 1:
        raise ValueError("CDD order must be >= 1")
    if not tau > 0:
        raise ValueError("tau must be positive")
    if scheme == "standard":
        ev = (Delay(tau),)
        for _ in range(order):
            ev = ev + (Pulse(X_PULSE),) + ev + (Pulse(Y_PULSE),) + ev + (Pulse(X_PULSE),) + ev + (Pulse(Y_PULSE),)
        count = 0
        for _ in range(order):
            count = 4 * count + 4
        return repeat(_normalize(ev), tau * 4 ** order, count, cycles)
    if scheme == "symmetric":
        block = (Delay(tau),)
        duration = tau
        for _ in range(order):
            half = _truncate(block, duration / 2)
            bracket = _normalize(
                half + (Pulse(X_PULSE),) + block + (Pulse(Y_PULSE),) + half
            )
            block = _normalize(bracket + bracket)
            duration *= 4
        count = sum(1 for e in block if isinstance(e, Pulse))
        return repeat(block, duration, count, cycles)
    raise ValueError(f"unknown CDD scheme {scheme!r}")


def _truncate(events, span: float):
    """Leading part of an event list covering exactly ``span`` time units.

    The cut must fall inside or at the edge of a delay; the constructions
    used here always cut symmetric blocks at their midpoint delay.
    """
    out, t = [], 0.0
    for e in events:
        if isinstance(e, Pulse):
            out.append(e)
            continue
        if t + e.duration <= span + 1e-12:
            out.append(e)
            t += e.duration
            if abs(t - span) <= 1e-12:
                return tuple(out)
        else:
            out.append(Delay(span - t))
            return tuple(out)
    raise ValueError("cannot truncate event list: span exceeds total duration")


def build_kdd(phi0_deg: float, tau: float, cycles: int = 1) -> Timeline:
    """KDD cycle: four Knill blocks, phases (30, 0, 90, 0, 30) + block phase.

    One cycle is [block(phi0) block(phi0 + 90)]^2, twenty pulses over a
    cycle time of 20 tau, with half-delays at the block edges and full
    delays between the pulses of a block.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")

    def block(base_deg):
        phases = (30.0 + base_deg, base_deg, 90.0 + base_deg, base_deg, 30.0 + base_deg)
        ev = [Delay(tau / 2)]
        for i, p in enumerate(phases):
            if i:
                ev.append(Delay(tau))
            ev.append(Pulse(PulseSpec(p)))
        ev.append(Delay(tau / 2))
        return tuple(ev)

    cycle = block(phi0_deg) + block(phi0_deg + 90.0) + block(phi0_deg) + block(phi0_deg + 90.0)
    return repeat(cycle, 20 * tau, 20, cycles)


def compose_xy(order: int, base: str, tau: float, cycles: int = 1) -> Timeline:
    """XY-8 and XY-16 supercycles from XY-4 blocks.

    With ``base='sym'`` the XY-8 half-cycle appends the time-reversed image
    of the symmetric XY-4 block (pattern X Y X Y Y X Y X, half-delays at the
    edges).  With ``base='asym'`` the asymmetric XY-4 block is repeated
    unchanged (pattern X Y X Y X Y X Y, uniform delays), which leaves the
    second-order flip-angle error term uncompensated.  XY-16 appends the
    180-degree phase-shifted copy of the XY-8 half in both variants.
    """
    if order not in (8, 16):
        raise ValueError("XY composition order must be 8 or 16")
    if base not in ("sym", "asym"):
        raise ValueError("base must be 'sym' or 'asym'")
    xy4 = build_basic(f"xy4_{base}", tau)
    if base == "sym":
        xy8_events = _normalize(xy4.events + xy4.reversed().events)
    else:
        xy8_events = _normalize(xy4.events + xy4.events)
    if order == 8:
        return repeat(xy8_events, 8 * tau, 8, cycles)
    xy8 = Timeline(xy8_events, 8 * tau, 8)
    cycle = _normalize(xy8_events + xy8.phase_shifted(180.0).events)
    return repeat(cycle, 16 * tau, 16, cycles)


def wrap_robust_pulses(timeline: Timeline) -> Timeline:
    """Replace every pi pulse by the five-pulse robust composite.

    The composite for a pulse of phase p is (p+30, p, p+90, p, p+30) degrees
    with zero internal delay; its net action is the ideal pi rotation about
    p followed by a -60 degree z rotation, robust to flip-angle errors.
    Delays are unchanged; the logical pulse count is retained for stats.
    """
    ev = []
    for e in timeline.events:
        if isinstance(e, Delay):
            ev.append(e)
            continue
        spec = e.spec
        if not spec.is_pi:
            raise ValueError("robust composite wrapping requires pi pulses")
        for shift in (30.0, 0.0, 90.0, 0.0, 30.0):
            ev.append(Pulse(spec.shifted(shift)))
    return Timeline(
        _normalize(ev),
        timeline.cycle_time,
        timeline.pulses_per_cycle * 5,
        timeline.cycles,
        logical_pulses_per_cycle=timeline.pulses_per_cycle,
    )


def stats(timeline: Timeline, pulse_duration: float) -> SequenceStats:
    """Pulse count, cycle time and duty cycle for a hypothetical pulse width.

    duty = n_pulses * t_p / (n_pulses * t_p + total delay time).
    """
    if pulse_duration < 0:
        raise ValueError("pulse duration must be >= 0")
    n = timeline.pulse_count
    total_delay = timeline.duration
    pulse_time = n * pulse_duration
    duty = pulse_time / (pulse_time + total_delay) if pulse_time > 0 else 0.0
    logical = timeline.logical_pulses_per_cycle
    return SequenceStats(
        pulse_count=n,
        cycle_time=timeline.cycle_time,
        duty_cycle=duty,
        logical_pulse_count=(logical * timeline.cycles) if logical else n,
    )


def is_reflection_symmetric(timeline: Timeline, tol: float = 1e-12) -> bool:
    """Timing audit: the canonical delay vector reads the same backwards.

    Pulse phases are compared as a multiset, which is invariant under
    reversal; the timing palindrome is what separates the symmetric builds
    (half-delays at the edges) from the asymmetric ones.
    """
    d = timeline.delay_vector()
    return all(abs(a - b) <= tol for a, b in zip(d, reversed(d)))


# ---------------------------------------------------------------------------
# Serialization


def to_text(timeline: Timeline) -> str:
    """Line-oriented form: ``D <duration>`` / ``P <phase_deg> <flip_deg>``."""
    lines = [
        f"# cycle_time {timeline.cycle_time!r} pulses_per_cycle "
        f"{timeline.pulses_per_cycle} cycles {timeline.cycles}"
        + (
            f" logical_pulses_per_cycle {timeline.logical_pulses_per_cycle}"
            if timeline.logical_pulses_per_cycle
            else ""
        )
    ]
    for e in timeline.events:
        if isinstance(e, Delay):
            lines.append(f"D {e.duration!r}")
        else:
            lines.append(f"P {e.spec.phase_deg!r} {e.spec.flip_deg!r}")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Timeline:
    """Parse the output of :func:`to_text`; exact round trip."""
    events = []
    meta = {"cycle_time": None, "pulses_per_cycle": None, "cycles": 1, "logical": None}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            toks = line[1:].split()
            kv = dict(zip(toks[::2], toks[1::2]))
            meta["cycle_time"] = float(kv.get("cycle_time", "nan"))
            meta["pulses_per_cycle"] = int(kv.get("pulses_per_cycle", 0))
            meta["cycles"] = int(kv.get("cycles", 1))
            if "logical_pulses_per_cycle" in kv:
                meta["logical"] = int(kv["logical_pulses_per_cycle"])
            continue
        toks = line.split()
        if toks[0] == "D" and len(toks) == 2:
            events.append(Delay(float(toks[1])))
        elif toks[0] == "P" and len(toks) == 3:
            events.append(Pulse(PulseSpec(float(toks[1]), float(toks[2]))))
        else:
            raise ValueError(f"unparseable timeline line: {raw!r}")
    ev = _normalize(events)
    pulse_count = sum(1 for e in ev if isinstance(e, Pulse))
    cycles = meta["cycles"]
    ppc = meta["pulses_per_cycle"] or (pulse_count // max(cycles, 1))
    cycle_time = meta["cycle_time"]
    if cycle_time is None or math.isnan(cycle_time):
        cycle_time = sum(e.duration for e in ev if isinstance(e, Delay)) / max(cycles, 1)
    return Timeline(ev, cycle_time, ppc, cycles, logical_pulses_per_cycle=meta["logical"])


def to_dict(timeline: Timeline) -> dict:
    """JSON-ready structured document."""
    events = []
    for e in timeline.events:
        if isinstance(e, Delay):
            events.append({"kind": "delay", "duration": e.duration})
        else:
            events.append(
                {"kind": "pulse", "phase_deg": e.spec.phase_deg, "flip_deg": e.spec.flip_deg}
            )
    meta = {
        "cycle_time": timeline.cycle_time,
        "pulses_per_cycle": timeline.pulses_per_cycle,
        "cycles": timeline.cycles,
        "pulse_count": timeline.pulse_count,
        "total_delay_time": timeline.duration,
    }
    if timeline.logical_pulses_per_cycle:
        meta["logical_pulses_per_cycle"] = timeline.logical_pulses_per_cycle
    return {"meta": meta, "events": events}


def from_dict(doc: dict) -> Timeline:
    events = []
    for e in doc["events"]:
        if e["kind"] == "delay":
            events.append(Delay(e["duration"]))
        elif e["kind"] == "pulse":
            events.append(Pulse(PulseSpec(e["phase_deg"], e["flip_deg"])))
        else:
            raise ValueError(f"unknown event kind {e['kind']!r}")
    meta = doc.get("meta", {})
    ev = _normalize(events)
    pulse_count = sum(1 for e in ev if isinstance(e, Pulse))
    cycles = meta.get("cycles", 1)
    return Timeline(
        ev,
        meta.get("cycle_time", sum(e.duration for e in ev if isinstance(e, Delay)) / cycles),
        meta.get("pulses_per_cycle", pulse_count // cycles),
        cycles,
        logical_pulses_per_cycle=meta.get("logical_pulses_per_cycle"),
    )


def to_json(timeline: Timeline) -> str:
    return json.dumps(to_dict(timeline), indent=2) + "\n"


# ---------------------------------------------------------------------------
# Name-based construction used by the CLI and scenario presets.

_FAMILIES = ("hahn", "cp", "cpmg", "udd", "xy4", "xy8", "xy16", "cdd", "kdd")


def make_sequence(
    name: str,
    tau: float,
    cycles: int = 1,
    order: int | None = None,
    symmetry: str = "sym",
    robust: bool = False,
    phi0_deg: float = 0.0,
) -> Timeline:
    """Build any supported sequence from its family name.

    ``name`` accepts the bare family (``cdd`` plus ``order=n``) or the fused
    spellings used by the presets (``cdd2``, ``udd3``).  ``symmetry`` picks
    the sym/asym variant for the xy4/xy8/xy16 builds and maps to the
    standard/symmetric scheme for cdd.
    """
    name = name.lower()
    for fam in ("cdd", "udd"):
        if name.startswith(fam) and len(name) > len(fam):
            if order is None:
                try:
                    order = int(name[len(fam):])
                except ValueError:
                    raise ValueError(f"unknown sequence name {name!r}") from None
            name = fam
    if name not in _FAMILIES:
        raise ValueError(f"unknown sequence name {name!r}")
    if name in ("hahn", "cp", "cpmg"):
        t = build_basic(name, tau, cycles)
    elif name == "udd":
        t = build_basic("udd", tau, cycles, order=order)
    elif name == "xy4":
        t = build_basic(f"xy4_{symmetry}", tau, cycles)
    elif name in ("xy8", "xy16"):
        t = compose_xy(int(name[2:]), symmetry, tau, cycles)
    elif name == "cdd":
        if order is None:
            raise ValueError("cdd requires an order")
        scheme = "symmetric" if symmetry in ("sym", "symmetric") else "standard"
        t = concatenate_cdd(order, tau, scheme, cycles)
    else:
        t = build_kdd(phi0_deg, tau, cycles)
    return wrap_robust_pulses(t) if robust else t
