"""Exception hierarchy.

Every error carries the CLI exit code for its class of failure, so the
command line can map an exception to ``2`` (bad input), ``3`` (numerical
failure) or ``4`` (not enough data) without a lookup table.
"""


class HavokError(Exception):
    exit_code = 1
    stage = None

    def to_dict(self):
        return {
            "error": type(self).__name__,
            "message": str(self),
            "stage": self.stage,
            "exit_code": self.exit_code,
        }


class InputError(HavokError, ValueError):
    exit_code = 2


class NumericError(HavokError, ArithmeticError):
    exit_code = 3


class InsufficientData(HavokError, ValueError):
    exit_code = 4


# input errors
class NonFinite(InputError):
    pass


class InvalidRank(InputError):
    pass


class InvalidBand(InputError):
    pass


class WindowOutOfRange(InputError):
    pass


class OverlapError(InputError):
    pass


class ConstantInput(InputError):
    pass


# numerical failures
class ConvergenceFailure(NumericError):
    pass


class RankDeficient(NumericError):
    pass


class Divergence(NumericError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class AllZeroForcing(NumericError):
    pass


class ZeroPower(NumericError):
    pass


class DegenerateVariance(NumericError):
    pass


class ZeroVariance(NumericError):
    pass


# insufficient data
class SeriesTooShort(InsufficientData):
    pass


ShortSeries = SeriesTooShort
TooShort = SeriesTooShort


class NoBeats(InsufficientData):
    pass


class GapTooLong(InsufficientData):
    pass


class InsufficientRecords(InsufficientData):
    pass
