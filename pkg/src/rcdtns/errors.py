"""Exception classes. Each carries the process exit code the CLI uses for it."""


class RcdtError(Exception):
    exit_code = 1


class AllZeroImage(RcdtError, ValueError):
    exit_code = 10


class NonMonotoneCdf(RcdtError, ValueError):
    exit_code = 11


class NonMonotoneInput(RcdtError, ValueError):
    exit_code = 12


class GridTooSmall(RcdtError, ValueError):
    exit_code = 13


class DegenerateClass(RcdtError, ValueError):
    exit_code = 20


class DimensionMismatch(RcdtError, ValueError):
    exit_code = 21


class MissingClass(RcdtError, ValueError):
    exit_code = 22


class FormatVersionMismatch(RcdtError):
    exit_code = 30


class CorruptFile(RcdtError):
    exit_code = 31


class BadMagic(RcdtError):
    exit_code = 32


class CountMismatch(RcdtError):
    exit_code = 33


class TruncatedFile(RcdtError):
    exit_code = 34


class SupportClipped(RcdtError, ValueError):
    exit_code = 40


class InsufficientSamples(RcdtError, ValueError):
    exit_code = 41


class EmptyTestSet(RcdtError, ValueError):
    exit_code = 42


class OverlappingSpecs(RcdtError, ValueError):
    exit_code = 43


class ConfigError(RcdtError, ValueError):
    exit_code = 2


class TooFewAngles(UserWarning):
    """Filtered back-projection with fewer than 16 angles streaks badly."""
