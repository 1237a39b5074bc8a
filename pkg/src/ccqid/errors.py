"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class CcqError(Exception):
    exit_code = 3


class ValidationError(CcqError):
    """An object failed a state/POVM/code invariant check."""

    exit_code = 1


class ParameterError(CcqError, ValueError):
    """Bad parameters: out-of-range letters, infeasible weights, mismatched sizes."""

    exit_code = 2


class ShapeError(ParameterError):
    pass


class DimensionLimitError(ParameterError):
    pass


class UndefinedQuantityError(ParameterError):
    """Requested quantity has no definition for the given sizes (e.g. e2 with one message pair)."""


class NumericalError(CcqError):
    exit_code = 3
