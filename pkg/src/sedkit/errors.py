"""Exception taxonomy shared by every module.

Two families matter for the CLI: configuration problems exit with code 4,
bad input data exits with code 3. Anything else is a plain bug.
"""


class SedkitError(Exception):
    exit_code = 1


class ConfigError(SedkitError):
    exit_code = 4


class DataError(SedkitError):
    exit_code = 3


class InvalidConfig(ConfigError):
    pass


class DegenerateFilterbank(ConfigError):
    pass


class InvalidWaveform(DataError):
    pass


class ClipTooShort(DataError):
    pass


class SampleRateMismatch(DataError):
    pass


class DomainMismatch(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class NoSignalPower(DataError):
    pass


class InvalidScores(DataError):
    pass


class UnknownClip(DataError):
    pass


class UnknownClass(DataError):
    pass


class InvalidGroundTruth(DataError):
    pass


class NoOperatingPoints(DataError):
    pass


class PlacementFailure(DataError):
    pass


class BoundaryError(DataError):
    pass
