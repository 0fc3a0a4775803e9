"""Exception hierarchy. CLI exit codes key off ``InputError`` vs ``ConfigError``."""


class TedPeakError(Exception):
    """Base class for all package errors."""


class InputError(TedPeakError):
    """Bad input data (CLI exit code 2)."""


class ConfigError(TedPeakError, ValueError):
    """Invalid parameters or mismatched inputs (CLI exit code 3)."""


class MalformedRow(InputError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class NonFiniteTed(MalformedRow):
    pass


class NonMonotoneIndex(MalformedRow):
    pass


class NonMonotoneLayer(MalformedRow):
    pass


class IoFailure(InputError, OSError):
    pass


class DegenerateWindow(TedPeakError, ValueError):
    pass


class LayerOutOfRange(InputError, ValueError):
    pass


class DegenerateSplit(ConfigError):
    pass


class DegenerateVariance(TedPeakError, ValueError):
    pass


class ZeroReference(ConfigError):
    pass


class OverlappingEvents(ConfigError):
    pass


class EventPastEnd(ConfigError):
    pass
