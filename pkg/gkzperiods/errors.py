"""Errors raised by gkzperiods, each with a machine-readable code."""


class GkzPeriodsError(Exception):
    """Base class of all gkzperiods errors."""

    code = "ERROR"


class MalformedInputError(GkzPeriodsError):
    """The input data violates the preconditions of an operation."""

    code = "MALFORMED_INPUT"


class SkeletonHitError(GkzPeriodsError):
    """The weight vector lies on the skeleton of the secondary fan."""

    code = "SKELETON_HIT"


class UnsupportedTriangulationError(GkzPeriodsError):
    """The triangulation is neither the Fermat nor the Dwork-perturbation one."""

    code = "UNSUPPORTED_TRIANGULATION"


class LimitNotFoundError(GkzPeriodsError):
    """An epsilon-combination keeps a pole at epsilon = 0."""

    code = "LIMIT_NOT_FOUND"


class PoleError(GkzPeriodsError):
    """A Gamma value or a sine reciprocal was requested at a pole."""

    code = "POLE"


class InsufficientTruncationError(GkzPeriodsError):
    """A coefficient beyond the truncation order was requested."""

    code = "INSUFFICIENT_TRUNCATION"


class ContourError(GkzPeriodsError):
    """The Mellin-Barnes contour cannot separate the pole families."""

    code = "CONTOUR"


class NotEquivalentError(GkzPeriodsError):
    """Two character indices do not lie in the same class."""

    code = "NOT_EQUIVALENT"


class InternalError(GkzPeriodsError):
    """A step that cannot fail for valid data failed anyway."""

    code = "INTERNAL"
