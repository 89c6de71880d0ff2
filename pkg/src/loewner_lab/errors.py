"""Exception types raised across the package.

Every error derives from :class:`LoewnerError`, itself a ``ValueError``, so
callers validating user input can catch one type.
"""


class LoewnerError(ValueError):
    pass


# drivers
class NonMonotoneTimes(LoewnerError):
    pass


class NonzeroOrigin(LoewnerError):
    pass


class LengthMismatch(LoewnerError):
    pass


class DegenerateStep(LoewnerError):
    pass


class ModeMismatch(LoewnerError):
    pass


class OutOfRange(LoewnerError):
    pass


class BadHorizon(LoewnerError):
    pass


# conformal maps
class BadPoint(LoewnerError):
    pass


class BranchFailure(LoewnerError):
    """A slit-map composition left the closed upper half-plane.

    This signals a branch bug, not bad input.
    """


class NotSimple(LoewnerError):
    pass


class NotInUpperHalfPlane(LoewnerError):
    pass


class DegenerateSegment(LoewnerError):
    pass


class SingularStep(LoewnerError):
    pass


class TargetSwallowed(LoewnerError):
    pass


class PastStoppingTime(LoewnerError):
    pass


# Bessel / estimates
class OutOfDomain(LoewnerError):
    pass


# geometry
class EmptySet(LoewnerError):
    pass


class LowerHalfPlane(LoewnerError):
    pass


class DomainViolation(LoewnerError):
    pass


# link patterns
class NotAPartition(LoewnerError):
    pass


class Crossing(LoewnerError):
    def __init__(self, first, second):
        self.first = tuple(first)
        self.second = tuple(second)
        super().__init__(f"pairs {self.first} and {self.second} cross")


class CoincidentPoints(LoewnerError):
    pass
