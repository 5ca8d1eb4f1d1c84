"""Intersection collision-avoidance supervision via inserted idle-time
scheduling: vehicle interval dynamics, exact and polynomial verifiers,
closed-loop supervisors, and a simulation harness."""

from .dynamics import (
    InputSignal,
    NoiseBounds,
    StateInterval,
    VehicleParams,
    VehicleState,
    correct_estimate,
    crossing_time,
    initial_estimate,
    integrate_extremal,
    predict_step,
    propagate_interval,
)
from .efficient import (
    ForbiddenRegionSet,
    UnitJobSet,
    approx_verify,
    declare_forbidden_regions,
    edd_generate,
    polynomial,
    relaxed_exact,
)
from .errors import (
    BlockedStateError,
    CrossguardError,
    IncompatibleMeasurement,
    InfeasibleInitialCondition,
    IntegrationDiverged,
    OracleSizeError,
    PermutationCapExceeded,
    ScheduleContractError,
)
from .exact import Schedule, exact_verify, schedule_for_sequence
from .scheduling import (
    SchedulingInstance,
    bad_set_overlap,
    deadline,
    idle_time,
    process_time,
    release_time,
    theta_max,
)
from .supervisor import (
    StepDecision,
    SupervisorConfig,
    SupervisorSession,
    desired_safe_over_step,
    initialize_session,
    safe_input_generator,
    supervisor_step,
)

__version__ = "0.1.0"
