"""Exception hierarchy shared across the package."""


class AGSRError(Exception):
    """Base class for all errors raised by agsr."""


class InvalidGraph(AGSRError, ValueError):
    pass


class NotSymmetric(AGSRError, ValueError):
    pass


class EigenFailure(AGSRError, ArithmeticError):
    pass


class InvalidTarget(AGSRError, ValueError):
    pass


class ShapeError(AGSRError, ValueError):
    pass


class NotScalar(AGSRError, ValueError):
    pass


class NumericalError(AGSRError, ArithmeticError):
    """A NaN or infinity appeared in a forward value or a gradient."""


class DegenerateProjection(AGSRError, ValueError):
    pass


class ConfigError(AGSRError, ValueError):
    pass


class CheckpointError(AGSRError, OSError):
    pass


class BadMagic(CheckpointError):
    pass


class VersionMismatch(CheckpointError):
    pass


class TruncatedFile(CheckpointError):
    pass


class DatasetError(AGSRError):
    pass


class DatasetTooSmall(DatasetError, ValueError):
    pass


class MissingFile(DatasetError, FileNotFoundError):
    pass


class MalformedMatrix(DatasetError, ValueError):
    pass


class AsymmetricGraph(DatasetError, ValueError):
    pass


class InsufficientSamples(AGSRError, ValueError):
    pass
