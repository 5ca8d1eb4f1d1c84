"""Exception types shared across the package."""


class CrossguardError(Exception):
    """Base class for package errors."""


class IntegrationDiverged(CrossguardError):
    """Integration produced a non-finite state."""


class IncompatibleMeasurement(CrossguardError):
    """Measurement band and prediction interval do not intersect.

    Signals a violation of the bounded-noise assumption; recovery policy
    is up to the caller (the simulation harness clamps to the prediction).
    """


class InfeasibleInitialCondition(CrossguardError):
    """The verifier rejected the initial configuration, so no supervisor
    session can be started from it."""


class BlockedStateError(CrossguardError):
    """No safe input signal could be produced for the current step.

    Unreachable from a feasible initial condition; raising it means a
    non-blocking guarantee was violated.
    """


class ScheduleContractError(CrossguardError):
    """An operation received a schedule that is not feasible for its
    instance (internal logic fault, not an input error)."""


class PermutationCapExceeded(CrossguardError):
    """Exhaustive sequence search hit the configured permutation cap."""


class OracleSizeError(CrossguardError):
    """Brute-force oracle invoked on an instance above its size guard."""
