"""Exception hierarchy shared across the toolkit."""


class SrgfError(Exception):
    """Base class for all toolkit errors."""


class InputError(SrgfError):
    """Unusable input: missing view files, bad metadata, dimension mismatch."""


class StreamError(SrgfError):
    """Corrupt or truncated bitstream.

    ``section`` names the part of the stream that failed to parse, so CLI
    error messages can point at it.
    """

    def __init__(self, message: str, section: str = "header"):
        super().__init__(message)
        self.section = section


class PluginError(SrgfError):
    """External reference-image codec failed or produced no output."""


class SingularSystemError(SrgfError):
    """A per-super-ray linear system could not be solved."""

    def __init__(self, message: str, label: int):
        super().__init__(message)
        self.label = label
