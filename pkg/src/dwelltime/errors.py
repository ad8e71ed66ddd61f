"""Exception types shared across the package."""


class DwelltimeError(Exception):
    """Base class for all package errors."""


class DimensionError(DwelltimeError):
    """Matrix dimensions are inconsistent with the requested operation."""


class InputError(DwelltimeError):
    """An argument violates a documented precondition (non-finite entries,
    asymmetry beyond tolerance, malformed problem description, ...)."""


class NumericalFailureError(DwelltimeError):
    """An iterative numerical procedure failed to converge within its cap."""


class EncodingError(DwelltimeError):
    """A parameter-dependent LMI cannot be encoded with the requested
    degrees or discretization."""


class ExtractionError(DwelltimeError):
    """Controller gain extraction hit a (near-)singular value of S."""


class SearchError(DwelltimeError):
    """A bound search exhausted its bracket without finding a feasible
    (or infeasible) probe."""


class ConsistencyError(DwelltimeError):
    """Internal cross-check failed: a certified answer disagrees with the
    exact oracle.  This always indicates a bug, never a property of the
    input system."""
