class DomainException(Exception):
    """Base exception for all domain-related errors."""

    pass


# --- Input and configuration errors ---


class ConfigurationError(DomainException):
    """Raised when a configuration document or CLI option is invalid."""

    pass


class InfeasibleSINRError(ConfigurationError):
    """Raised when the requested SINR cannot be met with non-negative interference."""

    pass


class MissingBlinkyDataError(ConfigurationError):
    """Raised when the joint algorithm is requested without blinky measurements."""

    pass


class UnsupportedAlgorithmError(ConfigurationError):
    """Raised when an unknown separation algorithm name is provided."""

    pass


class SignalError(DomainException):
    """Raised when a signal or spectrogram does not fit the requested operation."""

    pass


class SignalTooShortError(SignalError):
    pass


class FrameGeometryError(SignalError):
    """Raised when frame size, hop or spectrogram shape are inconsistent."""

    pass


class ZeroEnergyReferenceError(SignalError):
    pass


# --- Audio I/O errors ---


class AudioIOError(DomainException):
    """Base class for audio and data file failures; messages carry the path."""

    pass


class AudioReadError(AudioIOError):
    pass


class AudioWriteError(AudioIOError):
    pass


class SampleRateMismatchError(AudioIOError):
    """Raised when a file's sample rate differs from the configured one."""

    pass


# --- Numerical errors ---


class NumericalError(DomainException):
    """Base class for failures of the iterative numerical updates."""

    pass


class SingularUpdateError(NumericalError):
    """Raised when the demixing update meets a singular W_f V_fk."""

    def __init__(self, freq: int, source: int):
        self.freq = freq
        self.source = source
        super().__init__(f"update singular matrix at (f={freq}, k={source})")


class DegenerateNMFStateError(NumericalError):
    pass


class InvalidJointStateError(NumericalError):
    """Raised when variances, mixture variances or row means are not positive."""

    pass
