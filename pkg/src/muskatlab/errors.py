"""Exception hierarchy.

Every error carries a stable ``code`` string so that batch drivers can
write machine-readable failure reports.
"""


class MuskatError(Exception):
    code = "MUSKAT_ERROR"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class OrderingViolation(MuskatError, ValueError):
    code = "ORDERING_VIOLATION"


class NonfiniteInput(MuskatError, ValueError):
    code = "NONFINITE_INPUT"


class BandOutOfGrid(MuskatError, ValueError):
    code = "BAND_OUT_OF_GRID"


class BetaOutOfRange(MuskatError, ValueError):
    code = "BETA_OUT_OF_RANGE"


class EigFailure(MuskatError, RuntimeError):
    code = "EIG_FAILURE"


class NonpositiveSlope(MuskatError, RuntimeError):
    code = "NONPOSITIVE_SLOPE"


class NonpositiveFloor(MuskatError, RuntimeError):
    code = "NONPOSITIVE_FLOOR"


class InterfaceOverlap(MuskatError, ValueError):
    code = "INTERFACE_OVERLAP"


class OnInterface(MuskatError, ValueError):
    code = "ON_INTERFACE"


class GuardExceeded(MuskatError, ValueError):
    code = "GUARD_EXCEEDED"


class OutOfRadius(MuskatError, ValueError):
    code = "OUT_OF_RADIUS"


class NonfiniteState(MuskatError, FloatingPointError):
    code = "NONFINITE_STATE"

    def __init__(self, message, last_valid_time=None, **details):
        super().__init__(message, last_valid_time=last_valid_time, **details)
        self.last_valid_time = last_valid_time


class InsufficientSamples(MuskatError, ValueError):
    code = "INSUFFICIENT_SAMPLES"


class NonpositiveNorm(MuskatError, ValueError):
    code = "NONPOSITIVE_NORM"


class ConfigParseError(MuskatError, ValueError):
    code = "PARSE_ERROR"

    def __init__(self, message, line=None, column=None, **details):
        super().__init__(message, line=line, column=column, **details)
        self.line = line
        self.column = column


class ConfigValidationError(MuskatError, ValueError):
    code = "VALIDATION_ERROR"

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations), violations=self.violations)


class CheckpointError(MuskatError, ValueError):
    code = "CHECKPOINT_ERROR"
