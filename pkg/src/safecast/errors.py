"""Exception hierarchy shared across the package."""


class SafecastError(Exception):
    """Base class for all package errors."""


class DimensionError(SafecastError):
    """Array shapes are incompatible with the requested operation."""


class ArgumentError(SafecastError):
    """A scalar argument is outside its valid range."""


class FormatError(SafecastError):
    """An input file does not match its declared format."""


class EmptyInputError(SafecastError):
    """An input source contained no usable records."""


class TrainingError(SafecastError):
    """Training cannot continue (non-finite gradients, divergence)."""


class InferenceError(SafecastError):
    """A forward pass produced invalid distribution parameters."""


class LossError(SafecastError):
    """Loss evaluation received invalid distribution parameters."""


class ConfigError(SafecastError):
    """A run configuration is malformed or inconsistent."""
