"""Exception types shared across the pipeline."""


class SafeliftError(Exception):
    """Base class for all pipeline errors."""


class ParseError(SafeliftError):
    """Source text the crate parser cannot model.

    Carries the file and 1-based line of the offending construct.
    """

    def __init__(self, file: str, line: int, message: str):
        self.file = file
        self.line = line
        super().__init__(f"{file}:{line}: {message}")


class MissingManifest(SafeliftError):
    """Crate directory has no manifest file."""


class UnsupportedConstruct(SafeliftError):
    """A body construct the statement CFG builder cannot model."""


class IndivisibleStatement(SafeliftError):
    """A single statement exceeds the unit size limit after pruning.

    Decomposition does not raise this; it emits the statement as an
    oversized-flagged unit and records the condition here for reports.
    """


class SliceUnavailable(SafeliftError):
    """Context slice cannot be computed for a unit (CFG construction failed)."""


class MalformedResponse(SafeliftError):
    """Model reply missing required tags or with mismatched call-site count."""


class BackendError(SafeliftError):
    """Completion backend failure (network, HTTP status, missing mock file)."""


class BackendTimeout(BackendError):
    """Completion request exceeded its timeout."""


class BackendHttpError(BackendError):
    """Live backend answered with a non-success HTTP status."""

    def __init__(self, status: int, message: str = ""):
        self.status = status
        super().__init__(message or f"backend returned HTTP {status}")


class MockResponseMissing(BackendError):
    """Mock backend has no canned file for the requested unit and attempt."""


class OverlappingEdits(SafeliftError):
    """Two edits in one splice set touch the same lines of a file."""


class SpanOutOfDate(SafeliftError):
    """A file changed since its spans were computed; refusing to splice."""


class BaselineFailed(SafeliftError):
    """Crate does not build or pass tests before any translation."""


class ConfigError(SafeliftError):
    """Run configuration file is missing, malformed, or inconsistent."""


class ConfigMismatch(ConfigError):
    """Resume requested with a config that does not match the saved state."""


class CorruptState(SafeliftError):
    """State directory contents cannot be loaded."""
