"""Exception taxonomy shared by all canonsys modules.

Every failure mode an operation can report maps to one class here, so the CLI
can translate exceptions into exit codes (2 for validation, 3 for numerics)
without inspecting messages.
"""


class CanonsysError(Exception):
    """Base class for all canonsys errors."""


class ParameterError(CanonsysError, ValueError):
    """An argument is outside its documented domain."""


class StructuralError(CanonsysError):
    """An operation was applied to an object in an incompatible state
    (e.g. refining an interval that is not a knot gap)."""


class DomainError(CanonsysError):
    """Evaluation requested outside a function's documented domain."""


class ClassificationError(CanonsysError):
    """An endpoint classification (limit circle vs limit point) does not
    admit the requested operation."""


class ConvergenceError(CanonsysError):
    """An iterative procedure failed to stabilize within its budget.

    Carries the last two estimates so the caller can judge how far apart
    they were.
    """

    def __init__(self, message, estimates=None):
        super().__init__(message)
        self.estimates = estimates


class IntegrityError(CanonsysError):
    """Input data violates a structural guarantee it was supposed to carry
    (e.g. a Weyl function with negative imaginary part on the probe grid)."""


class DegeneracyError(CanonsysError):
    """A construction degenerated (vanishing Wronskian, zero initial data)."""


class NumericError(CanonsysError):
    """A numerical routine (quadrature, root finding) failed."""


class HorizonError(CanonsysError):
    """A query requires data beyond the simulated horizon."""


class DataError(CanonsysError, ValueError):
    """Sample data is malformed (NaNs, degenerate, too short)."""


class StepFloorWarning(UserWarning):
    """The step-size policy hit its hard floor; accuracy may be degraded."""


class BlowUpWarning(UserWarning):
    """An integration produced a non-finite state and was truncated."""
