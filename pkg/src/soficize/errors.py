"""Exception hierarchy shared by every module."""


class SoficizeError(Exception):
    """Base class for all library errors."""


class DomainError(SoficizeError, ValueError):
    """An argument lies outside the domain of an operation."""


class StructuralError(SoficizeError, ValueError):
    """Shapes, ranks or element sets do not fit together."""


class ConfigError(SoficizeError, ValueError):
    """A run configuration is malformed."""


class ValidationError(SoficizeError):
    """A numerical object fails a validity check; ``defect`` holds the measured size."""

    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class DegeneracyError(SoficizeError):
    """A Gram matrix or similar is numerically singular."""


class BoundViolation(SoficizeError, AssertionError):
    """A guaranteed inequality failed, which means a precondition was breached."""


class PreconditionError(DomainError):
    """One or more stated hypotheses fail.

    ``failures`` maps a condition name to ``(measured, allowed)``.
    """

    def __init__(self, message, failures=None):
        self.failures = dict(failures or {})
        detail = ", ".join(f"{k}: {v[0]:.4g} > {v[1]:.4g}" for k, v in self.failures.items())
        super().__init__(f"{message} ({detail})" if detail else message)


class FolnerCapExceeded(SoficizeError):
    """No box up to the configured radius cap meets the requested bound."""


class ScheduleError(DomainError):
    """A parameter schedule violates a required constraint."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class SearchFailedError(SoficizeError):
    """Candidate search exhausted its budget; ``result`` carries the best candidate seen."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class StepRejectedError(SoficizeError):
    """An inner step was refused; ``diagnostics`` names the failed hypothesis or clause."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class BlockFailedError(SoficizeError):
    """Block construction failed; ``partial`` holds the metrics gathered so far."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class PipelineFailedError(SoficizeError):
    """The outer recursion failed; ``prefix`` holds the completed blocks."""

    def __init__(self, message, prefix=None, diagnostics=None):
        super().__init__(message)
        self.prefix = prefix
        self.diagnostics = dict(diagnostics or {})


class OracleDeclined(SoficizeError):
    """The abelian oracle does not apply to the given input."""
