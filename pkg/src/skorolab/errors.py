"""Exception hierarchy. Every class carries a stable ``code`` string."""


class SkorolabError(ValueError):
    code = "ERROR"


class NonMonotoneKnots(SkorolabError):
    code = "NON_MONOTONE_KNOTS"


class DomainNotUnit(SkorolabError):
    code = "DOMAIN_NOT_UNIT"


class InconsistentLeftLimit(SkorolabError):
    code = "INCONSISTENT_LEFT_LIMIT"


class OutOfDomain(SkorolabError):
    code = "OUT_OF_DOMAIN"


class IndexOutOfFamily(SkorolabError):
    code = "INDEX_OUT_OF_FAMILY"


class GridTooCoarse(SkorolabError):
    code = "GRID_TOO_COARSE"


class BadParam(SkorolabError):
    code = "BAD_PARAM"


class BadDist(SkorolabError):
    code = "BAD_DIST"


class EmptySample(SkorolabError):
    code = "EMPTY"


class BadCdf(SkorolabError):
    code = "BAD_CDF"


class NotFinite(SkorolabError):
    code = "NOT_FINITE"


class HypothesisViolation(SkorolabError):
    """A model does not satisfy the hypotheses of the statement under test."""

    code = "HYPOTHESIS_VIOLATION"
