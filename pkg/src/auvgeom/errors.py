"""Exception taxonomy for the auvgeom package.

Every error raised by the library is a subclass of :class:`AuvgeomError`,
so callers can catch the whole family with one clause.  Conditions that a
Monte-Carlo run must survive (a diverging estimate, a non-converging line
search) are reported through result flags instead of exceptions; the
classes below cover the cases where no meaningful result exists.
"""


class AuvgeomError(Exception):
    """Base class for all auvgeom errors."""


class ZeroHorizontalRange(AuvgeomError):
    """Bearing requested for two points with no horizontal separation."""


class VerticalRay(AuvgeomError):
    """Elevation requested for a (near-)vertical ray, where the closed-form
    bent-ray expressions are undefined."""


class GrazingRay(AuvgeomError):
    """Ray so close to vertical that cos(theta +/- alpha) underflows the
    1e-12 guard and the travel-time logarithm diverges."""


class NoEigenray(AuvgeomError):
    """The numerical ray integrator could not bracket a launch angle that
    connects the two endpoints without a turning point."""


class DegenerateGeometry(AuvgeomError):
    """Jacobian denominators vanish: |cos^2(theta) - sin^2(alpha)| below
    1e-12, or zero horizontal range."""


class SingularFim(AuvgeomError):
    """Fisher matrix numerically singular (condition number above 1e12);
    the anchor geometry carries no information in some direction."""


class ZeroDiagonal(AuvgeomError):
    """A diagonal Fisher entry is exactly zero, so its reciprocal bound is
    undefined."""


class TooFewAnchors(AuvgeomError):
    """Fewer anchors than the minimum of four required for 3-D coverage."""


class NonPositiveK(AuvgeomError):
    """The radius-scale optimizer could not keep its iterate positive."""


class UnsupportedCount(AuvgeomError):
    """More anchors requested than a layout family defines (cube: 8)."""


class DegenerateAfterRetries(AuvgeomError):
    """Random layout generation kept producing degenerate anchor sets and
    gave up after the retry budget."""


class NoConvergedTrials(AuvgeomError):
    """Every trial of a Monte-Carlo batch failed to converge; no RMSE is
    defined."""


class DivergedEstimate(AuvgeomError):
    """A Gauss-Newton step left the sanity region (10x the anchor span).

    The single-sample estimator reports this condition through a
    non-converged result rather than raising; the class exists for callers
    that want to promote the flag to an exception.
    """


class SingularNormalMatrix(AuvgeomError):
    """The 3x3 Gauss-Newton normal system is numerically singular."""


class EmptyTable(AuvgeomError):
    """Plot emission requested for a result table with no rows."""
