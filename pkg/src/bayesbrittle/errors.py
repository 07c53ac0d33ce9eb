class BayesBrittleError(Exception):
    """Base class for library errors."""


class ConfigError(BayesBrittleError, ValueError):
    """Malformed experiment configuration or invalid argument."""

    exit_code = 1


class PreconditionError(BayesBrittleError, ValueError):
    """A construction was asked to run outside its stated preconditions."""

    exit_code = 2


class InvariantError(BayesBrittleError, RuntimeError):
    """An internal invariant check failed."""

    exit_code = 3
