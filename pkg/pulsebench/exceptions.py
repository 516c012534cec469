class PulseBenchError(Exception):
    """Base class for every error raised by pulsebench"""


class ConfigError(PulseBenchError, ValueError):
    """Invalid or incomplete run configuration"""


class InvalidLengthError(PulseBenchError, ValueError):
    pass


class DegenerateVarianceError(PulseBenchError, ValueError):
    pass


class OrderingError(PulseBenchError, ValueError):
    pass


class ClipFormatError(PulseBenchError, ValueError):
    """Bad magic or unsupported version in a container file"""


class TruncatedFileError(PulseBenchError, OSError):
    """File ended before the declared payload"""


class EmptySignalError(PulseBenchError, ValueError):
    pass


class EmptyInputError(PulseBenchError, ValueError):
    pass


class UnsupportedDirectionError(PulseBenchError, ValueError):
    pass


class TooShortError(PulseBenchError, ValueError):
    pass


class DegenerateLabelError(PulseBenchError, ValueError):
    pass


class DegenerateInputError(PulseBenchError, ValueError):
    pass


class ShapeError(PulseBenchError, ValueError):
    pass


class StateError(PulseBenchError, RuntimeError):
    pass


class TrainingError(PulseBenchError, RuntimeError):
    """Training aborted, e.g. on a non-finite loss"""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class WeightsShapeError(PulseBenchError, ValueError):
    def __init__(self, name: str, expected: tuple, found: tuple | None):
        super().__init__(f"weight tensor '{name}': expected shape {expected}, found {found}")
        self.name = name


class BandError(PulseBenchError, ValueError):
    pass


class DurationError(PulseBenchError, ValueError):
    pass


class InsufficientPeaksError(PulseBenchError, ValueError):
    pass


class WeightsFormatError(PulseBenchError, ValueError):
    pass
