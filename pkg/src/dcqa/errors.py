"""Exception types shared across the package."""


class DcqaError(Exception):
    """Base class for package errors."""


class InvalidInput(DcqaError, ValueError):
    pass


class ParseFailure(DcqaError):
    """Raised when LLM output carries no usable sub-question or answer marker."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class BackendError(DcqaError):
    """The language-model backend could not produce a completion."""


class TransientBackendError(BackendError):
    """A transport-level failure that is worth retrying."""


class InsufficientChains(DcqaError):
    pass


class InvalidShot(DcqaError, ValueError):
    pass


class SchemaError(DcqaError):
    def __init__(self, message: str, path: str = "", line: int = 0):
        where = f"{path}:{line}: " if path else ""
        super().__init__(f"{where}{message}")
        self.path = path
        self.line = line


class MissingFile(DcqaError, FileNotFoundError):
    pass
