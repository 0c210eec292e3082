"""Exception types shared by every module of the package."""


class PerronError(Exception):
    """Base class for all errors raised by this package."""


# series arithmetic

class TruncationError(PerronError):
    """A coefficient beyond the known truncation order was requested."""


class DimensionMismatch(PerronError):
    pass


class ZeroMatrix(PerronError):
    pass


class SingularLeadingTerm(PerronError):
    pass


class NotSubtractionFree(PerronError):
    pass


# tropical and graphs

class NotIrreducible(PerronError):
    pass


class UnknownNode(PerronError):
    pass


class NotStronglyConnected(PerronError):
    pass


class NotFlatSlanted(PerronError):
    pass


class BadE(PerronError):
    pass


class DeltaTooLarge(PerronError):
    pass


# eigen-quadruples

class ConvergenceFailure(PerronError):
    pass


class ResidualNotInImage(PerronError):
    pass


class GammaSingular(PerronError):
    pass


class PencilEmpty(PerronError):
    pass


class NotSemisimple(PerronError):
    """The leading eigenvalue (or a pencil eigenvalue) has a Jordan block."""


# driver

class SingularInput(PerronError):
    pass


class DegenerateDominance(PerronError):
    pass


class NotSingular(PerronError):
    pass


class NotDepthZero(PerronError):
    pass


class GenericnessViolation(PerronError):
    def __init__(self, report, message=None):
        self.report = report
        super().__init__(message or f"singular PF-data at positive depth: {report}")


class ParseError(PerronError):
    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (at byte {offset})")


class HasSimpleLoop(PerronError):
    """Gently-slanting was asked to process a component that carries a loop."""


class PositivityViolation(PerronError):
    """A quantity that must be nonnegative came out negative beyond the slack."""
