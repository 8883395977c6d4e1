"""Exception types shared across the library."""


class GlyphGanError(Exception):
    """Base class for all library errors."""


class ShapeError(GlyphGanError, ValueError):
    """Array shapes do not satisfy an operation's contract."""


class DataError(GlyphGanError, ValueError):
    """A dataset or input file violates its contract (bad dimensions,
    undecodable image, empty class directory, out-of-range label...)."""


class NumericError(GlyphGanError, ArithmeticError):
    """A numeric failure: NaN/Inf loss, oracle evaluation blow-up.

    ``report`` / ``checkpoint_path`` may carry partial results saved
    before the abort.
    """

    def __init__(self, msg, report=None, checkpoint_path=None):
        super().__init__(msg)
        self.report = report
        self.checkpoint_path = checkpoint_path


class CheckpointError(GlyphGanError, ValueError):
    """A checkpoint file cannot be read."""


class VersionMismatchError(CheckpointError):
    pass


class TruncatedFileError(CheckpointError):
    pass


class ChecksumError(CheckpointError):
    pass
