"""Ensemble evolution, process tomography and figure-of-merit extraction.

The engine evolves SU(2) propagators over a timeline's schedule, one
trajectory per noise realization, and averages the conjugation action into a
Pauli transfer matrix (a real 4x4 map on the operator basis I, sx, sy, sz).
The chi representation over the fixed basis (I, sx, i sy, sz) is obtained
from the transfer matrix by a fixed linear transformation, mirroring what
process tomography reconstructs.  Trajectory reduction order is fixed by
trajectory index, so results are bit-reproducible for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .noise import NoNoise, epsilon_draws, sample_fields
from .pulse_errors import (
    FreeSegment,
    PulseErrorModel,
    Schedule,
    build_schedule,
    pulse_axis_angle,
)
from .sequences import Timeline
from .su2 import PAULI_BASIS, IDENTITY, SIGMA_Y, _rotation_unchecked, bloch_state

__all__ = [
    "QuantumMap",
    "ChiMatrix",
    "Trace",
    "CHI_IDENTITY",
    "schedule_grid",
    "evolve_trajectory",
    "ensemble_propagators",
    "ensemble_map",
    "ensemble_map_snapshots",
    "chi_matrix",
    "chi_of_unitary",
    "apply_map",
    "apply_chi",
    "process_fidelity",
    "magnetization_trace",
    "echo_positions",
    "decoherence_time",
    "error_grid_fidelity",
    "matrix_power_batch",
]

#: Operator basis used for the chi representation.
E_BASIS = np.stack([IDENTITY, PAULI_BASIS[1], 1j * SIGMA_Y, PAULI_BASIS[3]])

CHI_IDENTITY = np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex)


def _chi_transform() -> np.ndarray:
    """Fixed 16x16 map from a flattened transfer matrix to flattened chi."""
    a = np.empty((16, 16), dtype=complex)
    for m in range(4):
        for n in range(4):
            a[:, 4 * m + n] = np.kron(E_BASIS[n].conj(), E_BASIS[m]).flatten(order="F")
    b = np.empty((16, 16), dtype=complex)
    for j in range(4):
        for k in range(4):
            vj = PAULI_BASIS[j].flatten(order="F")
            vk = PAULI_BASIS[k].flatten(order="F")
            b[:, 4 * j + k] = 0.5 * np.outer(vj, vk.conj()).flatten(order="F")
    return np.linalg.solve(a, b)


_CHI_FROM_PTM = _chi_transform()


@dataclass(frozen=True)
class QuantumMap:
    """Ensemble-averaged action on the Pauli basis (transfer representation)."""

    ptm: np.ndarray
    ensemble: int

    def sampling_tolerance(self) -> float:
        return 2.0 / math.sqrt(self.ensemble)


@dataclass(frozen=True)
class ChiMatrix:
    """Process matrix over (I, sx, i sy, sz)."""

    matrix: np.ndarray
    ensemble: int = 1


@dataclass(frozen=True)
class Trace:
    """Ensemble-averaged Bloch components at the sample times."""

    times: np.ndarray
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    meta: dict = field(default_factory=dict)

    def component(self, axis: str) -> np.ndarray:
        return {"x": self.sx, "y": self.sy, "z": self.sz}[axis]

    @property
    def transverse(self) -> np.ndarray:
        return np.hypot(self.sx, self.sy)


# ---------------------------------------------------------------------------
# Trajectory evolution


def schedule_grid(timeline: Timeline, model: PulseErrorModel) -> np.ndarray:
    """Noise-sampling grid (positive-length segment boundaries) for a timeline."""
    return build_schedule(timeline, model).noise_grid()


def _fields_for(schedule: Schedule, noise, seed: int, ensemble: int) -> np.ndarray:
    """Sampled fields for a schedule; degenerate (zero-span) schedules get a
    single zero column so instantaneous-pulse-only timelines still evolve."""
    grid = schedule.noise_grid()
    if len(grid) < 2:
        return np.zeros((ensemble, 1))
    return sample_fields(noise, grid, seed, ensemble)


def _segment_axis_angle(seg, model, eps, fields, slot, extra_bz):
    """Unit axes (M, 3) and angles (M,) for one schedule segment."""
    if isinstance(seg, FreeSegment):
        if fields.ndim == 3:
            vec = fields[:, slot, :].copy()
            vec[:, 2] += extra_bz
        else:
            vec = np.zeros((fields.shape[0], 3))
            vec[:, 2] = fields[:, slot] + extra_bz
        norm = np.linalg.norm(vec, axis=-1)
        angle = norm * seg.duration
        safe = np.where(norm > 0, norm, 1.0)
        axis = vec / safe[:, None]
        axis[norm == 0] = (0.0, 0.0, 1.0)
        return axis, angle
    bz = fields[:, slot, 2] if fields.ndim == 3 else fields[:, slot]
    return pulse_axis_angle(seg.spec, model, bz=bz, epsilon=eps)


def _walk(schedule: Schedule, model, eps, fields, sample_times=None, record=None):
    """Time-ordered propagator product with optional mid-evolution sampling.

    ``record(t, U)`` is called at each requested sample time with the
    accumulated (M, 2, 2) propagators; samples at a segment boundary see the
    state after every segment ending there (pulses included).
    """
    n_traj = fields.shape[0]
    u = np.broadcast_to(IDENTITY, (n_traj, 2, 2)).copy()
    slots = schedule.field_slots()
    samples = np.asarray(sample_times, dtype=float) if sample_times is not None else None
    s_ptr = 0
    t = 0.0
    tol = 1e-9 * max(schedule.total_time, 1.0)
    for k, seg in enumerate(schedule.segments):
        end = t + seg.duration
        axis, angle = _segment_axis_angle(seg, model, eps, fields, slots[k], schedule.free_extra_bz)
        if samples is not None and seg.duration > 0:
            while s_ptr < len(samples) and samples[s_ptr] < end - tol:
                frac = (samples[s_ptr] - t) / seg.duration
                if frac > tol:
                    record(samples[s_ptr], _rotation_unchecked(axis, angle * frac) @ u)
                else:
                    record(samples[s_ptr], u)
                s_ptr += 1
        u = _rotation_unchecked(axis, angle) @ u
        t = end
    if samples is not None:
        while s_ptr < len(samples):
            record(samples[s_ptr], u)
            s_ptr += 1
    return u


def evolve_trajectory(timeline: Timeline, model: PulseErrorModel, trajectory) -> np.ndarray:
    """Propagator of one noise realization over the full timeline.

    The trajectory must have been sampled on :func:`schedule_grid` of the
    same timeline and error model; a mismatched grid raises ValueError.
    """
    schedule = build_schedule(timeline, model)
    grid = schedule.noise_grid()
    if len(trajectory.times) != len(grid) or np.max(np.abs(trajectory.times - grid)) > 1e-9:
        raise ValueError("noise trajectory grid does not cover the timeline schedule")
    fields = trajectory.values[None, ...]
    eps = np.array([model.epsilon])
    return _walk(schedule, model, eps, fields)[0]


def ensemble_propagators(
    timeline: Timeline,
    model: PulseErrorModel,
    noise=NoNoise(),
    ensemble: int = 1,
    seed: int = 0,
    epsilon_spread: float = 0.0,
) -> np.ndarray:
    """Per-trajectory propagators, shape (ensemble, 2, 2), fixed index order."""
    if ensemble < 1:
        raise ValueError("ensemble size must be >= 1")
    schedule = build_schedule(timeline, model)
    fields = _fields_for(schedule, noise, seed, ensemble)
    eps = epsilon_draws(model.epsilon, epsilon_spread, seed, ensemble)
    return _walk(schedule, model, eps, fields)


def _ptm_of_unitaries(u: np.ndarray) -> np.ndarray:
    """Mean Pauli transfer matrix of a batch of unitaries."""
    r = np.einsum("jab,mbc,kcd,mad->mjk", PAULI_BASIS, u, PAULI_BASIS, u.conj()).real / 2.0
    return r.mean(axis=0)


def ensemble_map(
    timeline: Timeline,
    model: PulseErrorModel,
    noise=NoNoise(),
    ensemble: int = 1,
    seed: int = 0,
    epsilon_spread: float = 0.0,
) -> QuantumMap:
    """Monte-Carlo average of the conjugation action over noise trajectories."""
    u = ensemble_propagators(timeline, model, noise, ensemble, seed, epsilon_spread)
    return QuantumMap(_ptm_of_unitaries(u), ensemble)


def ensemble_map_snapshots(
    timeline: Timeline,
    model: PulseErrorModel,
    noise=NoNoise(),
    ensemble: int = 1,
    seed: int = 0,
    times=None,
    epsilon_spread: float = 0.0,
) -> list:
    """Averaged maps at intermediate times (e.g. cycle boundaries)."""
    schedule = build_schedule(timeline, model)
    fields = _fields_for(schedule, noise, seed, ensemble)
    eps = epsilon_draws(model.epsilon, epsilon_spread, seed, ensemble)
    out = []
    _walk(
        schedule,
        model,
        eps,
        fields,
        sample_times=times,
        record=lambda t, u: out.append(QuantumMap(_ptm_of_unitaries(u), ensemble)),
    )
    return out


# ---------------------------------------------------------------------------
# Process representations and fidelity


def chi_matrix(qmap: QuantumMap) -> ChiMatrix:
    """Chi representation of an averaged map by fixed linear inversion."""
    ptm = np.asarray(qmap.ptm, dtype=float)
    top = ptm[0] - np.array([1.0, 0.0, 0.0, 0.0])
    if np.max(np.abs(top)) > qmap.sampling_tolerance() + 1e-9:
        raise ValueError("map is not trace-preserving within sampling tolerance")
    chi = (_CHI_FROM_PTM @ ptm.ravel()).reshape(4, 4)
    chi = (chi + chi.conj().T) / 2.0
    return ChiMatrix(chi, qmap.ensemble)


def chi_of_unitary(u: np.ndarray) -> ChiMatrix:
    """Chi matrix of a pure unitary channel (rank one)."""
    coeff = np.array([np.trace(e.conj().T @ u) / 2.0 for e in E_BASIS])
    return ChiMatrix(np.outer(coeff, coeff.conj()))


def apply_map(qmap: QuantumMap, rho: np.ndarray) -> np.ndarray:
    coeff = np.einsum("kab,ba->k", PAULI_BASIS, np.asarray(rho, dtype=complex)) / 2.0
    return np.einsum("k,jk,jab->ab", coeff, qmap.ptm, PAULI_BASIS)


def apply_chi(chi: ChiMatrix, rho: np.ndarray) -> np.ndarray:
    m = chi.matrix
    rho = np.asarray(rho, dtype=complex)
    return np.einsum("mn,mab,bc,ndc->ad", m, E_BASIS, rho, E_BASIS.conj())


def process_fidelity(a, b) -> float:
    """Normalized overlap |Tr(A B^dag)| / sqrt(Tr(A A^dag) Tr(B B^dag)).

    Accepts two operators of the same shape (2x2 propagators or 4x4 chi
    matrices); wrapper types are unwrapped.  Symmetric and invariant under
    global phase.
    """
    a = np.asarray(getattr(a, "matrix", a), dtype=complex)
    b = np.asarray(getattr(b, "matrix", b), dtype=complex)
    if a.shape != b.shape:
        raise ValueError("process_fidelity arguments must share a representation")
    na = np.trace(a @ a.conj().T).real
    nb = np.trace(b @ b.conj().T).real
    if na <= 0 or nb <= 0:
        raise ValueError("process_fidelity requires nonzero operators")
    return float(abs(np.trace(a @ b.conj().T)) / math.sqrt(na * nb))


# ---------------------------------------------------------------------------
# Magnetization traces and derived quantities


def magnetization_trace(
    timeline: Timeline,
    model: PulseErrorModel,
    noise=NoNoise(),
    initial="x",
    sample_times=None,
    ensemble: int = 1,
    seed: int = 0,
    epsilon_spread: float = 0.0,
    label: str = "",
) -> Trace:
    """Ensemble-averaged <sx>, <sy>, <sz> at the requested times.

    The initial state is the +1 eigenstate of the given Bloch axis, so the
    error-free, noise-free evolution of an eigenstate reads 1 along its own
    axis.  Samples must lie within the timeline span.
    """
    times = np.sort(np.asarray(sample_times, dtype=float))
    total = timeline.duration
    if len(times) == 0:
        raise ValueError("at least one sample time is required")
    if times[0] < -1e-12 or times[-1] > total + 1e-9 * max(total, 1.0):
        raise ValueError("sample times must lie within the timeline span")
    schedule = build_schedule(timeline, model)
    fields = _fields_for(schedule, noise, seed, ensemble)
    eps = epsilon_draws(model.epsilon, epsilon_spread, seed, ensemble)
    rho0 = bloch_state(initial)
    recorded = []

    def record(t, u):
        rho = np.einsum("mab,bc,mdc->mad", u, rho0, u.conj())
        comps = np.einsum("kab,mba->k", PAULI_BASIS[1:], rho).real / ensemble
        recorded.append((t, comps))

    _walk(schedule, model, eps, fields, sample_times=times, record=record)
    ts = np.array([r[0] for r in recorded])
    comps = np.array([r[1] for r in recorded])
    meta = {
        "label": label,
        "initial_axis": initial if isinstance(initial, str) else tuple(initial),
        "ensemble": ensemble,
        "seed": seed,
        "pulse_times": timeline.pulse_times,
        "cycle_time": timeline.cycle_time,
        "error_model": model,
        "noise": noise,
    }
    return Trace(ts, comps[:, 0], comps[:, 1], comps[:, 2], meta)


def _parabola_vertex(x: np.ndarray, y: np.ndarray) -> float:
    """Abscissa of the parabola through three points (non-uniform spacing)."""
    x0, x1, x2 = x
    y0, y1, y2 = y
    d1 = (y1 - y0) / (x1 - x0)
    d2 = (y2 - y1) / (x2 - x1)
    curv = (d2 - d1) / (x2 - x0)
    if curv == 0:
        return float(x1)
    return float((x0 + x1) / 2 - d1 / (2 * curv))


def echo_positions(trace: Trace, min_per_window: int = 8) -> np.ndarray:
    """Times of local maxima of the transverse magnetization magnitude.

    Interior maxima are refined by quadratic interpolation of the three
    samples around each peak; a maximum at the final sample (an echo forming
    exactly at the end, as in the Hahn sequence) is reported at the sample.
    The initial point is never reported: it is the prepared state, not a
    revival.  Raises ValueError when any inter-pulse window holds fewer than
    ``min_per_window`` samples.
    """
    pulses = trace.meta.get("pulse_times", ())
    times = trace.times
    for a, b in zip(pulses, pulses[1:]):
        if np.count_nonzero((times >= a - 1e-12) & (times <= b + 1e-12)) < min_per_window:
            raise ValueError("trace is sampled too sparsely for echo detection")
    m = trace.transverse
    out = []
    for i in range(1, len(m) - 1):
        if m[i] >= m[i - 1] and m[i] >= m[i + 1] and (m[i] > m[i - 1] or m[i] > m[i + 1]):
            out.append(_parabola_vertex(times[i - 1 : i + 2], m[i - 1 : i + 2]))
    if len(m) >= 2 and m[-1] > m[-2]:
        out.append(times[-1])
    return np.array(out)


def decoherence_time(trace: Trace, threshold: float = 1.0 / math.e) -> float:
    """First downward crossing of the prepared component through ``threshold``.

    Linear interpolation between samples; returns +inf when the envelope
    never crosses within the trace.  The trace must start at or above the
    threshold.
    """
    axis = trace.meta.get("initial_axis", "x")
    if not isinstance(axis, str):
        raise ValueError("decoherence_time requires a labeled initial axis")
    env = np.abs(trace.component(axis))
    if env[0] < threshold:
        raise ValueError("trace must start at or above the threshold")
    below = np.nonzero(env < threshold)[0]
    if len(below) == 0:
        return math.inf
    i = below[0]
    t0, t1 = trace.times[i - 1], trace.times[i]
    e0, e1 = env[i - 1], env[i]
    if e0 == e1:
        return float(t1)
    return float(t0 + (e0 - threshold) * (t1 - t0) / (e0 - e1))


# ---------------------------------------------------------------------------
# Noise-free error maps over (epsilon, delta) grids


def matrix_power_batch(u: np.ndarray, n: int) -> np.ndarray:
    """Binary-exponentiation power of a batch of 2x2 operators."""
    result = np.broadcast_to(IDENTITY, u.shape).copy()
    base = u.copy()
    while n:
        if n & 1:
            result = base @ result
        base = base @ base
        n >>= 1
    return result


def error_grid_fidelity(one_cycle: Timeline, cycles: int, eps_values, delta_values):
    """Propagator and chi fidelity vs identity over a flip-angle/offset grid.

    Valid for instantaneous pulses with no environment, where free evolution
    is the identity: the cycle propagator is the ordered pulse product and
    the total propagator its ``cycles`` power.  For a unitary channel the
    chi fidelity equals the squared propagator fidelity.

    Returns (f_prop, f_chi), each shaped (len(eps_values), len(delta_values)).
    """
    eps = np.asarray(eps_values, dtype=float)
    del_ = np.asarray(delta_values, dtype=float)
    e_grid, d_grid = np.meshgrid(eps, del_, indexing="ij")
    amp = 1.0 + e_grid.ravel()
    zc = np.broadcast_to(d_grid.ravel(), amp.shape)
    norm = np.hypot(amp, zc)
    u = np.broadcast_to(IDENTITY, (amp.size, 2, 2)).copy()
    for spec in one_cycle.pulses:
        phase = spec.phase
        axis = np.stack(
            [amp * math.cos(phase) / norm, amp * math.sin(phase) / norm, zc / norm],
            axis=-1,
        )
        u = _rotation_unchecked(axis, spec.flip * norm) @ u
    total = matrix_power_batch(u, cycles)
    f_prop = np.abs(np.trace(total, axis1=-2, axis2=-1)) / 2.0
    f_prop = f_prop.reshape(e_grid.shape)
    return f_prop, f_prop**2
