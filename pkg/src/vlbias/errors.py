"""Exception types shared across the package.

Split in two families so the CLI can map them onto exit codes without
inspecting messages: input problems (bad files, schema violations,
mismatched shapes on disk) and computation problems (degenerate or
out-of-domain values reached inside a metric).
"""

from __future__ import annotations


class VlbiasError(Exception):
    """Base class for every error raised by this package."""


# ---------------------------------------------------------------------------
# Input / file problems


class FormatError(VlbiasError):
    """A file does not conform to its container format."""


class SchemaError(VlbiasError):
    """A JSON document does not match the expected schema."""


class AlignmentError(VlbiasError):
    """Two inputs that must describe the same rows disagree."""


class DataError(VlbiasError):
    """Well-formed container, but the values inside violate an invariant."""


class IoError(VlbiasError):
    """An underlying OS read or write failed."""


class ComparabilityError(VlbiasError):
    """Reports cannot be compared (different dataset or retrieval depth)."""


# ---------------------------------------------------------------------------
# Computation problems


class DegenerateVectorError(VlbiasError):
    """A vector with (near-)zero norm cannot be normalized."""

    def __init__(self, row: int, norm: float):
        self.row = row
        self.norm = norm
        super().__init__(f"row {row} has norm {norm:.3e}, cannot normalize")


class DegenerateDistributionError(VlbiasError):
    """Similarity scores are (near-)constant; the effect size is undefined."""


class DimError(VlbiasError):
    """Operands have incompatible dimensions."""


class StateError(VlbiasError):
    """An operand is not in the state the operation requires."""


class DomainError(VlbiasError):
    """An argument lies outside the operation's domain."""


class EmptyRetrievalError(VlbiasError):
    """A retrieval produced no rows, so no distribution can be formed."""


INPUT_ERRORS = (
    FormatError,
    SchemaError,
    AlignmentError,
    DataError,
    IoError,
    ComparabilityError,
)

COMPUTE_ERRORS = (
    DegenerateVectorError,
    DegenerateDistributionError,
    DimError,
    StateError,
    DomainError,
    EmptyRetrievalError,
)
