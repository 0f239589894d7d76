"""Grover search in an array of coupled cavities doped with lambda atoms."""

__version__ = "0.1.0"

from .dynamics import (  # noqa: E402
    EffectiveModel,
    EffectiveParams,
    FullModel,
    PropagatorAB,
    ProtocolParams,
    analytic_propagator,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    effective_params,
    evolve,
    two_level_ab,
)
from .grover import (  # noqa: E402
    FidelityTrace,
    build_schedule,
    measure,
    optimal_iterations,
    oracle_ideal,
    oracle_pulsed,
    reflection_ideal,
    run_protocol,
)
from .pulses import Pulse, Schedule, envelope, pulse_area, pulse_for_area  # noqa: E402
from .robustness import DisorderSpec, run_sweep, run_trial, sample_disorder  # noqa: E402
from .statespace import (  # noqa: E402
    bloch_modes,
    build_full_basis,
    build_register_basis,
    w_state,
)
