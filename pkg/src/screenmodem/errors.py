"""Exception types raised across the modem."""


class ModemError(Exception):
    """Base class for every error raised by screenmodem."""


class InvalidTiming(ModemError, ValueError):
    pass


class OutOfRangeTone(ModemError, ValueError):
    pass


class UnrepresentableTone(ModemError, ValueError):
    pass


class InvalidFrame(ModemError, ValueError):
    pass


class InvalidArgument(ModemError, ValueError):
    pass


class FramingError(ModemError, ValueError):
    pass


class ConfigurationError(ModemError, ValueError):
    pass


class ProfileParseError(ModemError, ValueError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UndefinedSNR(ModemError, ValueError):
    pass


class IncompatibleWaveform(ModemError, ValueError):
    pass


class InsufficientData(ModemError, ValueError):
    pass


class TruncatedPacket(ModemError):
    pass


class UnresolvablePlan(ModemError, ValueError):
    pass


class FormatError(ModemError, ValueError):
    pass


class PaddingWarning(UserWarning):
    """Bits were zero-padded to fill the last symbol."""
