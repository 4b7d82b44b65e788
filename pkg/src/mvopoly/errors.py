"""Exception hierarchy shared by every module."""


class MvopolyError(Exception):
    """Base class for all library errors."""


class SpecError(MvopolyError, ValueError):
    """Malformed input specification (JSON or Python objects)."""


class DegreeOverflow(MvopolyError):
    pass


class DivisorNearZero(MvopolyError):
    """A quadrature node or atom sits (numerically) on the zero set of a divisor."""


class PoleOnSupport(MvopolyError):
    pass


class SingularBlock(MvopolyError):
    pass


class SingularMinor(MvopolyError):
    """A leading block minor of a moment matrix is numerically singular."""

    def __init__(self, level, smin=None, threshold=None):
        self.level = level
        self.smin = smin
        self.threshold = threshold
        msg = f"leading block minor singular at level {level}"
        if smin is not None:
            msg += f" (smallest singular value {smin:.3e} < {threshold:.3e})"
        super().__init__(msg)


class NoPoisedSet(MvopolyError):
    pass


class NodeOffVariety(MvopolyError, ValueError):
    pass


class RepeatedRoots(MvopolyError):
    pass


class SingularSystem(MvopolyError):
    pass


class NonConvergentSeries(MvopolyError):
    pass


class InvarianceViolated(MvopolyError):
    pass


class ToleranceExceeded(MvopolyError):
    pass
