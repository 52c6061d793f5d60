"""Exception types shared across modules."""


class ImpossibleOutcomeError(RuntimeError):
    """A forced measurement branch has (numerically) zero probability."""

    def __init__(self, message: str, prefix: tuple[int, ...] = ()):
        super().__init__(message)
        self.prefix = prefix


class BackendUnsupportedError(RuntimeError):
    """The requested backend cannot represent the protocol (e.g. CCZ on a tableau)."""


class ProtocolError(ValueError):
    """Schema or structural problem in a protocol document; ``path`` locates it."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class TrivialObservableError(ValueError):
    """A measured observable with degenerate spectrum carries no information."""


class CanonicalizationError(ValueError):
    """The protocol cannot be rewritten into unitary-measure-recover order."""
