"""Exception hierarchy. Each class carries the CLI exit status it maps to."""


class MixhomError(Exception):
    exit_code = 1


class ParseError(MixhomError, ValueError):
    exit_code = 3


class DomainError(MixhomError, ValueError):
    exit_code = 4


class DegenerateDataError(DomainError):
    pass


class NumericalError(MixhomError, RuntimeError):
    exit_code = 5


class ConfigurationError(MixhomError, ValueError):
    exit_code = 6


class UnsupportedKernelError(ConfigurationError):
    pass


class CalibrationError(MixhomError, RuntimeError):
    exit_code = 7
