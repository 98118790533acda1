"""Exception types raised by zzbound."""


class ZZBoundError(Exception):
    """Base class for all package errors."""


class SpecError(ZZBoundError, ValueError):
    """A prior, channel or quadrature specification is malformed."""


class PreconditionError(ZZBoundError, ValueError):
    """An operation was called outside its documented domain."""


class OutsideSupportError(ZZBoundError, ValueError):
    """Every shifted law has zero density and zero mass at the query point."""


class QuadratureError(ZZBoundError, RuntimeError):
    """A quadrature rule could not reach its tolerance within the node cap."""
