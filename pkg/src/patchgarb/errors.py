"""Exception hierarchy. CLI exit codes are keyed off the base classes."""


class PatchGarbError(Exception):
    pass


class ShapeError(PatchGarbError, ValueError):
    pass


class NumericError(PatchGarbError, ArithmeticError):
    """Non-finite values, division by zero, gradient-check failures."""


class DataError(PatchGarbError):
    """Problems with input images, dataset trees or eval sets."""


class InvalidImageError(DataError, ValueError):
    pass


class PatchSizeError(DataError, ValueError):
    pass


class InvalidGridError(DataError, ValueError):
    pass


class DegenerateClassError(DataError, ValueError):
    pass


class LabelError(DataError, ValueError):
    pass


class InvalidBatchError(DataError, ValueError):
    pass


class CheckpointError(DataError):
    pass


class CorruptCheckpointError(CheckpointError):
    pass


class ArchitectureMismatchError(CheckpointError):
    pass
