"""Exception hierarchy.

Validation errors (bad inputs, malformed files) are distinct from numerical
errors (operations that fail on structurally valid data); the CLI maps the
former to exit code 2 and the latter to exit code 3.
"""


class StabilisError(Exception):
    """Base class for all package errors."""


class ValidationError(StabilisError):
    """Structurally invalid input: bad file, bad shape, broken invariant."""


class NumericalError(StabilisError):
    """Computation failed on structurally valid input."""


class DegenerateMesh(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class EmptyContacts(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


class UnpairedFiles(ValidationError):
    def __init__(self, message, unpaired=()):
        super().__init__(message)
        self.unpaired = list(unpaired)


class NonOrthonormalRotation(ValidationError):
    pass


class NonPositiveDepth(NumericalError):
    pass


class NonManifoldBoundary(NumericalError):
    pass


class NotWatertight(NumericalError):
    pass


class DivergedNaN(NumericalError):
    """Optimization produced a non-finite energy or gradient.

    Carries the energy trace recorded up to the failure point.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []
