"""Exception hierarchy shared by the library and the command line."""


class BiclusterError(Exception):
    """Base class for every error raised by supbiclust."""


class ConfigError(BiclusterError, ValueError):
    """Invalid configuration (hyper-parameters, K, simulation settings)."""


class InvalidFamilyError(ConfigError):
    """A distribution family cannot be used for the requested operation."""


class InvalidDataError(BiclusterError, ValueError):
    """Data values fall outside the support of their family."""


class ShapeError(InvalidDataError):
    """Array dimensions are mutually inconsistent."""


class NumericalError(BiclusterError, ArithmeticError):
    """A non-finite value appeared during optimisation."""

    def __init__(self, message, iteration=None, block=None):
        super().__init__(message)
        self.iteration = iteration
        self.block = block


class SelectionError(BiclusterError):
    """Automatic selection of K could not produce a non-empty fit."""


class SearchFailure(BiclusterError):
    """Every candidate of a hyper-parameter search failed."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []
