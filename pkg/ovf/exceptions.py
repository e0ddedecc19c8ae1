from django.core.exceptions import ValidationError


class DomainError(ValidationError):
    """Input lies outside the domain of an operation."""


class ConstructionError(ValidationError):
    """A value could not be built because one of its invariants fails."""


class SynthesisError(ValidationError):
    """The four reductions do not satisfy the conditions needed to glue them."""


class InconsistencyError(ValidationError):
    """A computed result failed its own verification.

    ``report`` carries the residual report that exposed the failure.
    """

    def __init__(self, message, code=None, params=None, report=None):
        super().__init__(message, code=code, params=params)
        self.report = report
