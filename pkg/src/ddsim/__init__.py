"""Single-qubit dynamical-decoupling simulator.

Builds pulse timelines for the standard decoupling families, evolves them
under pulse imperfections and stochastic dephasing environments, and reports
process fidelities, chi matrices, magnetization traces, echo positions and
decoherence times.  The ``ddsim`` command line exposes scenario presets that
write deterministic CSV/JSON tables.
"""

from .engine import (
    CHI_IDENTITY,
    ChiMatrix,
    QuantumMap,
    Trace,
    apply_chi,
    apply_map,
    chi_matrix,
    chi_of_unitary,
    decoherence_time,
    echo_positions,
    ensemble_map,
    ensemble_map_snapshots,
    ensemble_propagators,
    error_grid_fidelity,
    evolve_trajectory,
    magnetization_trace,
    process_fidelity,
    schedule_grid,
)
from .noise import NoNoise, NoiseTrajectory, OUDephasing, StaticDephasing, StaticVector, sample_trajectory
from .pulse_errors import (
    IDEAL_PULSES,
    InfeasibleScheduleError,
    PulseErrorModel,
    build_schedule,
    pulse_propagator,
)
from .sequences import (
    Delay,
    Pulse,
    PulseSpec,
    SequenceStats,
    Timeline,
    build_basic,
    build_kdd,
    compose_xy,
    concatenate_cdd,
    is_reflection_symmetric,
    make_sequence,
    stats,
    udd_times,
    wrap_robust_pulses,
)
from .su2 import (
    IDENTITY,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    bloch_state,
    effective_generator,
    pauli_decompose,
    pauli_reconstruct,
    rotation,
)

__version__ = "0.1.0"
