"""Exception hierarchy shared by all modules."""


class QuarticLabError(Exception):
    """Base class for every error raised by the package."""


class InvalidArgument(QuarticLabError, ValueError):
    pass


class PrecisionExhausted(QuarticLabError):
    """Raised when a certified numeric routine hits its precision cap."""


class ConstructionFailed(QuarticLabError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class InternalConsistencyError(QuarticLabError):
    """Two independent routes disagreed, or an exact identity failed."""


class MarkedPointSingular(QuarticLabError):
    pass


class ReducibleFiber(QuarticLabError):
    pass


class InvalidPoint(QuarticLabError, ValueError):
    pass


class UnsupportedDomain(QuarticLabError, TypeError):
    pass


class SectionTorsion(QuarticLabError):
    pass


class DegenerateFamily(QuarticLabError):
    pass


class IllConditionedFiber(QuarticLabError):
    pass


class UndefinedMap(QuarticLabError):
    """The point lies on the fundamental locus of the requested map."""


class SingularFiber(QuarticLabError):
    pass


class BranchTrackingError(QuarticLabError):
    pass
