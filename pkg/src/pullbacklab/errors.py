"""Exception types shared across the engine."""


class PullbackLabError(Exception):
    """Base class for engine failures."""


class DegenerateTriple(PullbackLabError):
    """Two of the three interpolation points coincide within tolerance."""


class CollisionDetected(PullbackLabError):
    """Tracked points violate the pairwise-separation requirement.

    Carries the offending pair so a collision is reported, never silent.
    """

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class RootFindingFailure(PullbackLabError):
    """Polynomial solver failed to produce usable roots."""


class NotPostsingularlyFinite(PullbackLabError):
    """A singular-value orbit does not land on a repelling or
    superattracting cycle within the iteration budget."""


class AmbiguousCycle(PullbackLabError):
    """Nearby orbit points refine to different periodic cycles."""


class BranchJumpSuspected(PullbackLabError):
    """Inverse-branch continuation violated the step safeguard even at
    maximal subdivision depth."""


class NearCriticalValue(PullbackLabError):
    """Path clearance to the critical values is below tolerance."""


class ChartOverflow(PullbackLabError):
    """A tracked point left the working chart (|z| beyond the chordal-chart
    threshold); the computation needs a Mobius transport."""


class EndpointMismatch(PullbackLabError):
    """Concatenation endpoints do not match within tolerance."""


class InvalidBranchDatum(PullbackLabError):
    """Branch datum fails its consistency checks."""


class NoApplicableComparison(PullbackLabError):
    """No punctured-disk comparison region contains the query point."""


class NoSeparatingAnnulus(PullbackLabError):
    """No round annulus separates the cluster from its complement."""


class InjectivityUndetermined(PullbackLabError):
    """The conservative injectivity test failed; not a proof of
    non-injectivity."""
