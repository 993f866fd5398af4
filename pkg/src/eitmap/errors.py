"""Exception hierarchy.

Each family carries the CLI exit code it maps to: 1 for configuration
problems, 2 for bad input data, 3 for fuzzy-model problems.
"""


class EitmapError(Exception):
    exit_code = 2


class ConfigError(EitmapError):
    exit_code = 1


class DataError(EitmapError):
    exit_code = 2


class ModelError(EitmapError):
    exit_code = 3


# dataio
class MalformedHeader(DataError):
    pass


class TruncatedPayload(DataError):
    pass


class NonMonotonicTriggers(DataError):
    pass


class UnknownKindTag(DataError):
    pass


class InvalidPixelMap(DataError):
    pass


class IoFailure(DataError):
    pass


# gating / features / models
class NoCompleteCycle(DataError):
    pass


class EmptyInput(DataError):
    pass


class NegativeInput(DataError):
    pass


class KindMismatch(DataError):
    pass


# fuzzy
class RuleBaseError(ModelError):
    """Rule base file or structure is invalid; message names the field path."""


class InputOutOfDomain(ModelError):
    pass


class UnknownVariable(ModelError):
    pass


class RuleBaseMismatch(ModelError):
    pass


# segmentation / evaluation
class ThresholdOutOfRange(ConfigError):
    pass


class EmptyReference(DataError):
    pass


class FullReference(DataError):
    pass


# phantom
class RegionOutOfGrid(ConfigError):
    pass


class NoRuleFired(UserWarning):
    """Every rule had zero firing strength; the output midpoint was returned."""


class NoMass(UserWarning):
    """Membership mass summed to zero; the midpoint of the x-range was returned."""
