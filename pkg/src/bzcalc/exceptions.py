"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input violates a documented precondition (CLI exit status 1)."""


class ModelViolation(RuntimeError):
    """Scenario data is internally inconsistent (CLI exit status 2).

    Carries a machine-readable certificate describing the violated condition.
    """

    def __init__(self, message: str, certificate: dict | None = None):
        super().__init__(message)
        self.certificate = certificate if certificate is not None else {}
