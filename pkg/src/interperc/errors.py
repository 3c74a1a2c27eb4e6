class InterpercError(Exception):
    """Base class for every error raised by interperc."""


class InvalidParameterError(InterpercError, ValueError):
    """A generator, map constructor or cascade received an out-of-range argument."""


class InsufficientDataError(InterpercError, ValueError):
    """A series is too short for the requested approximate entropy."""


class NoTransitionError(InterpercError, RuntimeError):
    """The system survives at p=0 or dies at p=1, so there is nothing to bracket."""


class ConfigError(InterpercError, ValueError):
    """The experiment configuration is malformed or inconsistent."""
