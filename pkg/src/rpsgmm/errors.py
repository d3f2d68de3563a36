"""Exception hierarchy.

Errors split into two families so callers (the CLI in particular) can map
them to exit codes: problems with the input data, and numerical failures
during fitting or scoring.
"""


class RpsGmmError(Exception):
    """Base class for all package errors."""


class DataError(RpsGmmError, ValueError):
    """Input data is malformed or inconsistent."""


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(DataError):
    pass


class DuplicateSampleError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class DomainError(DataError):
    pass


class SeriesTooShortError(DataError):
    def __init__(self, message, required=None):
        self.required = required
        super().__init__(message)


class BundleError(DataError):
    pass


class IncompatibleFormatError(BundleError):
    pass


class IntegrityError(BundleError):
    pass


class NumericalError(RpsGmmError, ArithmeticError):
    """Fitting or scoring failed for numerical reasons."""


class NonPositiveDefiniteError(NumericalError):
    pass


class InsufficientPointsError(NumericalError):
    pass


class DegenerateComponentError(NumericalError):
    """An M-step found components with (almost) no responsibility mass."""

    def __init__(self, components):
        self.components = tuple(int(c) for c in components)
        super().__init__(f"degenerate mixture components: {list(self.components)}")


class DegenerateFitError(NumericalError):
    pass
