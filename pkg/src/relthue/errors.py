"""Exception types shared across the solver."""


class RelThueError(Exception):
    """Base class for solver failures."""


class ParseError(RelThueError):
    pass


class VerificationError(RelThueError):
    pass


class PrecisionError(RelThueError):
    """Working precision too low to certify a numeric step."""


class CardinalityCapError(RelThueError):
    """An enumeration would exceed the configured point cap."""


class CheckpointError(RelThueError):
    pass


class CaseBDataRequired(RelThueError):
    pass


class ScheduleError(ParseError, ValueError):
    """An enumeration schedule violating s < S or the 2/s window condition."""
