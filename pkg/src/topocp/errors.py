"""Exception hierarchy shared by the toolkit.

Each class maps to one CLI exit code so library failures surface with a
stable, scriptable status.
"""


class TopocpError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 4


class UsageError(TopocpError):
    """Bad command-line invocation (unknown flags, missing arguments)."""

    exit_code = 1


class VolumeIOError(TopocpError):
    """File-level failure: unreadable path, malformed volume, truncated payload.

    ``code`` is a short machine-readable tag and ``offset`` the byte position
    at which parsing failed (when known).
    """

    exit_code = 2

    def __init__(self, message: str, code: str = "io", offset: int | None = None):
        self.code = code
        self.offset = offset
        if offset is not None:
            message = f"{message} [code={code}, byte offset={offset}]"
        else:
            message = f"{message} [code={code}]"
        super().__init__(message)


class ParameterError(TopocpError):
    """Invalid numeric parameter or grid contract violation."""

    exit_code = 3


class ComputationError(TopocpError):
    """A metric or computation is undefined for the given inputs."""

    exit_code = 4
