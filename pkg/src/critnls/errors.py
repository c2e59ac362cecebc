"""Exception taxonomy shared by all critnls modules."""


class CritnlsError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(CritnlsError):
    """Invalid configuration: bad grid parameters, unknown keys, range violations."""


class InputError(CritnlsError):
    """Invalid input data, e.g. a non-finite profile sample."""


class ShapeError(CritnlsError):
    """Array length does not match the grid."""


class UnsupportedExponentError(CritnlsError):
    """Lebesgue exponent outside the supported range [2, inf)."""


class ResolutionError(CritnlsError):
    """A phase multiplier is not Nyquist-resolved on the current grid."""


class SingularTimeError(CritnlsError):
    """Kernel or estimate evaluated at a degenerate time (t = 0 or sin t = 0)."""


class DomainError(CritnlsError):
    """A ball or cutoff support does not fit inside the grid."""


class UsageError(CritnlsError):
    """Operation called with an unsupported potential kind or mode."""


class WatchdogError(CritnlsError):
    """Run aborted by a watchdog; carries the partial trajectory."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory

    @property
    def last_good(self):
        if self.trajectory is None or len(self.trajectory) == 0:
            return None
        return self.trajectory.fields[-1]


class ContractionError(CritnlsError):
    """Fixed-point iteration failed to contract; carries the iteration report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ChecksumError(CritnlsError):
    """Checkpoint payload does not match its stored checksum."""
