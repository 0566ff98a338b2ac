"""Simulation and estimation toolkit for a periodically driven two-level sensor."""

from .params import (
    ControlErrorParams,
    FloquetDriveParams,
    SensorParams,
    SignalParams,
    angular_to_mhz,
    mhz_to_angular,
)
from .hamiltonian import (
    Constant,
    Cosine,
    Frame,
    HamiltonianSpec,
    PauliTerm,
    build_fds_prime,
    build_lab_fds,
    build_lab_ods,
    effective_hamiltonian,
    kick_operator,
    quasi_energy_shift,
    to_signal_rotating,
)
from .propagator import (
    EvolutionResult,
    PropagationError,
    PropagatorOptions,
    StateVector,
    evolve,
    expectation,
    micromotion_error,
    rabi_population,
)
from .metrology import (
    PureStateParam,
    QfiEstimate,
    SensitivityParams,
    cramer_rao,
    field_from_rabi,
    optimal_sensing_time,
    qfi_exact,
    qfi_theta_phi,
    rabi_from_field,
    sensitivity,
    theta_phi_from_expectations,
)
from .measurement import (
    MonteCarloConfig,
    ReadoutModel,
    ShotRecord,
    estimate_p0,
    measure_expectation,
    qfi_pipeline,
    simulate_counts,
)
from .experiments import (
    DdConfig,
    DecayFit,
    NoiseModel,
    PRESET_NAMES,
    PulseSequence,
    Scenario,
    calibrate_noise,
    make_preset,
    run_dd_experiment,
    run_qfi_scaling,
    run_rabi_scan,
    run_robustness_sweep,
)

__version__ = "0.1.0"
