"""Exception hierarchy shared across the engine.

The CLI maps these onto exit codes: usage errors -> 1, input format
errors -> 2, backend/protocol errors -> 3, anything else -> 4.
"""


class TrackfuseError(Exception):
    """Base class for all engine errors."""


class MaskFormatError(TrackfuseError, ValueError):
    """A mask payload violates the RLE contract."""


class DimensionMismatch(TrackfuseError, ValueError):
    """Two masks (or a mask and a frame) disagree on width/height."""


class PropagationError(TrackfuseError):
    """A mask could not be carried between two frames."""

    def __init__(self, message, from_frame=None, to_frame=None):
        super().__init__(message)
        self.from_frame = from_frame
        self.to_frame = to_frame


class InputFormatError(TrackfuseError):
    """Malformed input file; carries the offending path and line."""

    def __init__(self, path, line, message):
        self.path = path
        self.line = line
        self.message = message
        loc = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{loc}: {message}")


class ProtocolError(TrackfuseError):
    """The external propagator backend misbehaved (timeout, bad payload, exit)."""


class UsageError(TrackfuseError):
    """Bad command-line invocation."""
