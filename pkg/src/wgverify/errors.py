"""Exception hierarchy shared by all modules."""


class WgvError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(WgvError, ValueError):
    """Malformed or inconsistent user input."""

    exit_code = 2


class ConfigError(InputError):
    """A protocol or source configuration violates its preconditions."""


class CapabilityError(WgvError):
    """The request exceeds a dense-simulation or exhaustive-search limit."""

    exit_code = 3


class StateError(WgvError):
    """Invalid operation on a quantum state (e.g. re-measuring a qubit)."""


class SourceError(WgvError):
    """A state source was asked for more copies than it can emit."""
