"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when an input value violates a declared precondition.

    ``field`` names the offending configuration field or argument so
    callers (and the CLI) can point at the exact problem.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        if field is not None and field not in message:
            message = f"{field}: {message}"
        super().__init__(message)


class CorruptArtifactError(RuntimeError):
    """Raised when a persisted artifact fails its manifest hash check."""
