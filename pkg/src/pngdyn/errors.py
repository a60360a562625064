"""Exception hierarchy shared by every pngdyn module."""


class PngError(Exception):
    """Base class for all errors raised by pngdyn."""


class ShapeError(PngError, ValueError):
    """Array dimensions do not match the game's action spaces."""


class DomainError(PngError, ValueError):
    """An argument lies outside the domain of an operation (t <= 0, bad damping, ...)."""


class IncompleteInputError(PngError, KeyError):
    """A required neighbour policy or config entry is missing."""


class UnknownGameError(PngError, KeyError):
    """A builtin game name was not recognised."""


class NumericError(PngError, ArithmeticError):
    """Non-finite values were passed in or produced."""


class DivergenceError(NumericError):
    """Integration produced a non-finite or out-of-domain state.

    ``step`` is the index of the first bad step and ``time`` the value of
    the integration variable at which it occurred.
    """

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


class InitializationError(PngError, RuntimeError):
    """Regret initialisation could not satisfy its constraints."""


class GenerationError(PngError, RuntimeError):
    """A graph with the requested properties could not be generated."""


class ConfigError(PngError, ValueError):
    """An experiment configuration is malformed."""
