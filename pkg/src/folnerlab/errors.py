"""Exception types shared across the toolkit."""


class FolnerlabError(Exception):
    """Base class for all toolkit errors."""


class BackendMismatchError(FolnerlabError):
    """Operands belong to different group backends."""


class EmptySetError(FolnerlabError):
    """An operation that needs positive measure received an empty set."""


class PreconditionError(FolnerlabError):
    """A stated hypothesis of a construction is violated.

    The message names the violated inequality so reports can quote it.
    """


class CertificateError(FolnerlabError):
    """A verified bound failed.  Carries the offending certificate name."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class PipelineStageError(FolnerlabError):
    """A pipeline stage aborted; ``stage`` names the failing step."""

    def __init__(self, stage, message):
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage


class ConfigError(FolnerlabError):
    """Malformed experiment configuration."""
