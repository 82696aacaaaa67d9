class PipelineError(Exception):
    """Base class for data errors raised by the detection pipeline."""


class ConfigError(PipelineError):
    """Invalid or unknown scenario / manifest value."""


class FrameError(PipelineError):
    """IQ frame does not match the configured FFT length."""


class AlignmentError(PipelineError):
    """East and West frames do not share start time and bin grid."""


class OrderingError(PipelineError):
    """Records presented out of the required order."""


class BandError(PipelineError):
    """Injection outside the sampled band."""


class RangeError(PipelineError, ValueError):
    """Argument outside its valid range."""


class DegenerateInputError(PipelineError):
    """Input carries no information (zero noise, zero dwell, ...)."""


class UnsupportedConfigurationError(PipelineError):
    """Configuration the pipeline does not model (e.g. non-meridian pointing)."""
