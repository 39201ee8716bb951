"""Imperfect pulse propagators and timeline scheduling.

Two error channels are modeled.  A fractional flip-angle error ``epsilon``
scales the implemented rotation angle (actual = nominal * (1 + epsilon)).
A normalized resonance offset ``offset`` (detuning over control amplitude)
tilts the rotation axis toward z and stretches the angle.  Pulses are either
instantaneous or have a finite duration ``pulse_duration``; finite pulses
additionally pick up the instantaneous dephasing field and are absorbed
symmetrically into the neighboring delays so cycle times are preserved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sequences import Delay, Pulse, PulseSpec, Timeline
from .su2 import _rotation_unchecked

__all__ = [
    "PulseErrorModel",
    "PulsePropagator",
    "InfeasibleScheduleError",
    "FreeSegment",
    "PulseSegment",
    "Schedule",
    "pulse_propagator",
    "pulse_axis_angle",
    "build_schedule",
    "IDEAL_PULSES",
]


@dataclass(frozen=True)
class PulseErrorModel:
    """Flip-angle error, normalized offset and pulse-duration mode.

    ``pulse_duration`` of ``None`` selects instantaneous pulses.  In finite
    mode the nominal control amplitude is pi / pulse_duration and the offset
    also acts as a z field ``offset * pi / pulse_duration`` during free
    evolution; in instantaneous mode free evolution is governed solely by
    the noise model.
    """

    epsilon: float = 0.0
    offset: float = 0.0
    pulse_duration: float | None = None

    def __post_init__(self):
        if not self.epsilon > -1.0:
            raise ValueError("flip-angle error must satisfy epsilon > -1")
        if self.pulse_duration is not None and not self.pulse_duration > 0:
            raise ValueError("finite pulse duration must be positive")

    @property
    def finite(self) -> bool:
        return self.pulse_duration is not None

    @property
    def control_amplitude(self) -> float:
        """Nominal amplitude in rad/time; infinite for instantaneous pulses."""
        if self.pulse_duration is None:
            return math.inf
        return math.pi / self.pulse_duration


IDEAL_PULSES = PulseErrorModel()


@dataclass(frozen=True)
class PulsePropagator:
    operator: np.ndarray
    elapsed: float


def pulse_axis_angle(spec: PulseSpec, model: PulseErrorModel, bz=0.0, epsilon=None):
    """Effective rotation axis (unit) and angle for an imperfect pulse.

    The axis is proportional to ((1+eps) cos p, (1+eps) sin p, zc) and the
    angle is flip * sqrt((1+eps)^2 + zc^2), where zc is the normalized total
    z field seen by the pulse: the offset plus, for finite pulses, the
    instantaneous dephasing value over the control amplitude.  ``bz`` and
    ``epsilon`` broadcast, so whole ensembles evaluate in one call.
    """
    eps = model.epsilon if epsilon is None else np.asarray(epsilon, dtype=float)
    amp = 1.0 + np.asarray(eps, dtype=float)
    if model.finite:
        zc = model.offset + np.asarray(bz, dtype=float) / model.control_amplitude
    else:
        zc = np.asarray(model.offset, dtype=float)
    amp, zc = np.broadcast_arrays(amp, zc)
    norm = np.hypot(amp, zc)
    phase = spec.phase
    axis = np.stack(
        [amp * math.cos(phase) / norm, amp * math.sin(phase) / norm, zc / norm],
        axis=-1,
    )
    return axis, spec.flip * norm


def pulse_propagator(spec: PulseSpec, model: PulseErrorModel, bz: float = 0.0) -> PulsePropagator:
    """SU(2) propagator actually implemented for one pulse."""
    axis, angle = pulse_axis_angle(spec, model, bz)
    elapsed = model.pulse_duration if model.finite else 0.0
    return PulsePropagator(_rotation_unchecked(axis, angle), elapsed)


class InfeasibleScheduleError(ValueError):
    """Finite pulse does not fit into its neighboring delays."""

    def __init__(self, pulse_index: int, message: str | None = None):
        self.pulse_index = pulse_index
        super().__init__(message or f"pulse {pulse_index} does not fit its window")


@dataclass(frozen=True)
class FreeSegment:
    duration: float


@dataclass(frozen=True)
class PulseSegment:
    spec: PulseSpec
    duration: float
    index: int


@dataclass(frozen=True)
class Schedule:
    """Time-ordered evolution segments plus the static extra z field that
    applies during free evolution (offset term, finite mode only)."""

    segments: tuple
    free_extra_bz: float
    total_time: float

    @property
    def durations(self) -> np.ndarray:
        return np.array([s.duration for s in self.segments])

    def noise_grid(self) -> np.ndarray:
        """Strictly increasing boundaries of the positive-length segments."""
        edges = [0.0]
        for s in self.segments:
            if s.duration > 0:
                edges.append(edges[-1] + s.duration)
        return np.array(edges)

    def field_slots(self) -> np.ndarray:
        """Column of the sampled field array that each segment reads.

        Zero-length segments inherit the field of the enclosing instant
        (the preceding positive segment, or the first one at t = 0).
        """
        slots, pos = [], -1
        n_pos = sum(1 for s in self.segments if s.duration > 0)
        for s in self.segments:
            if s.duration > 0:
                pos += 1
                slots.append(pos)
            else:
                slots.append(max(pos, 0))
        return np.array(slots if self.segments else [], dtype=int).clip(0, max(n_pos - 1, 0))


def build_schedule(timeline: Timeline, model: PulseErrorModel) -> Schedule:
    """Map a timeline to evolution segments under the given error model.

    Instantaneous mode keeps all delays and inserts zero-length pulse
    segments.  Finite mode carves ``pulse_duration`` out of the two adjacent
    delays (half each; boundary pulses take the full width from their single
    neighbor), preserving the total cycle time.  A pulse whose window cannot
    supply the required time raises :class:`InfeasibleScheduleError` with
    the offending pulse index.
    """
    events = timeline.events
    if not model.finite:
        segments, idx = [], 0
        for e in events:
            if isinstance(e, Delay):
                segments.append(FreeSegment(e.duration))
            else:
                segments.append(PulseSegment(e.spec, 0.0, idx))
                idx += 1
        return Schedule(tuple(segments), 0.0, timeline.duration)

    t_p = model.pulse_duration
    remaining = [e.duration if isinstance(e, Delay) else None for e in events]
    pulse_idx = -1
    for i, e in enumerate(events):
        if not isinstance(e, Pulse):
            continue
        pulse_idx += 1
        before = i - 1 if i > 0 and isinstance(events[i - 1], Delay) else None
        after = i + 1 if i + 1 < len(events) and isinstance(events[i + 1], Delay) else None
        if before is None and after is None:
            raise InfeasibleScheduleError(pulse_idx, f"pulse {pulse_idx} has no adjacent delay")
        want_before = t_p / 2 if (before is not None and after is not None) else (t_p if after is None else 0.0)
        want_after = t_p - want_before
        tol = 1e-12 * max(1.0, t_p)
        if before is not None and remaining[before] < want_before - tol:
            raise InfeasibleScheduleError(pulse_idx)
        if after is not None and remaining[after] < want_after - tol:
            raise InfeasibleScheduleError(pulse_idx)
        if before is not None:
            remaining[before] = max(remaining[before] - want_before, 0.0)
        if after is not None:
            remaining[after] = max(remaining[after] - want_after, 0.0)

    segments, idx = [], 0
    for i, e in enumerate(events):
        if isinstance(e, Delay):
            segments.append(FreeSegment(remaining[i]))
        else:
            segments.append(PulseSegment(e.spec, t_p, idx))
            idx += 1
    extra = model.offset * model.control_amplitude
    return Schedule(tuple(segments), extra, timeline.duration)
