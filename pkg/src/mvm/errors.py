"""Exception types shared across the package."""


class MvmError(Exception):
    """Base class for package-specific errors."""


class SchemaError(MvmError):
    """An instance, index, or dataset does not conform to the view schema."""


class OracleScaleError(MvmError):
    """A brute-force oracle was asked to enumerate too large a tensor."""


class DataFormatError(MvmError):
    """A dataset text stream is malformed."""


class ModelFormatError(MvmError):
    """A model file is malformed or has an unsupported version."""


class MetricError(MvmError):
    """A metric is undefined for the given inputs."""


class DivergenceError(MvmError):
    """Training produced non-finite values."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch
