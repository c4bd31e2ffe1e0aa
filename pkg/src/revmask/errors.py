"""Exception types shared across the pipeline."""


class RevmaskError(Exception):
    """Base class for all pipeline errors."""


class MalformedWavError(RevmaskError):
    """WAV header or chunk structure is invalid."""


class UnsupportedWavError(RevmaskError):
    """WAV encoding we do not handle (only integer PCM and IEEE float)."""


class ClippingError(RevmaskError):
    """Samples exceed the representable range of the requested format."""


class SilentSignalError(RevmaskError):
    """An operation that requires signal energy received silence."""


class SampleRateMismatchError(RevmaskError):
    """Inputs that must share a sample rate do not."""


class AnechoicSignalError(RevmaskError):
    """Reverberant and direct-path signals are identical (zero residual)."""


class InsufficientDecayError(RevmaskError):
    """Impulse-response tail too short for a reverberation-time fit."""


class ShapeMismatchError(RevmaskError):
    """Grids or masks with incompatible shapes or metadata."""


class ConfigError(RevmaskError):
    """Invalid experiment configuration."""


class ConditionError(RevmaskError):
    """Failure while processing one (sentence, condition) work item."""
