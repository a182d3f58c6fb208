"""
Exception types for metric_amalgam.

All domain failures raise a MetricError carrying a machine-readable ErrorCode,
so the command line can emit structured error documents.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any


class ErrorCode(Enum):
    """
    Structured error codes shared by the library and the command line.
    """
    # matrix validation
    NON_SQUARE = "NonSquare"
    NEGATIVE_ENTRY = "NegativeEntry"
    ASYMMETRIC_PAIR = "AsymmetricPair"
    NONZERO_DIAGONAL = "NonzeroDiagonal"
    TRIANGLE_VIOLATION = "TriangleViolation"
    ZERO_OFF_DIAGONAL = "ZeroOffDiagonal"
    DUPLICATE_LABEL = "DuplicateLabel"
    INVALID_METRIC = "InvalidMetric"
    INVALID_SCALAR = "InvalidScalar"
    INVALID_DOCUMENT = "InvalidDocument"

    # labels and subsets
    LABEL_MISMATCH = "LabelMismatch"
    EMPTY_SUBSET = "EmptySubset"
    UNKNOWN_LABEL = "UnknownLabel"
    SUBSET_TOO_SMALL = "SubsetTooSmall"
    SUBSET_NOT_CONTAINED = "SubsetNotContained"
    NONPOSITIVE_CONSTANT = "NonpositiveConstant"

    # gluing
    BRIDGE_TOO_SMALL = "BridgeTooSmall"
    NONPOSITIVE_BRIDGE = "NonpositiveBridge"
    DISJOINT_LABEL_SETS = "DisjointLabelSets"
    OVERLAP_DISAGREEMENT = "OverlapDisagreement"
    LABEL_COLLISION = "LabelCollision"
    NONPOSITIVE_SEPARATION = "NonpositiveSeparation"
    UNKNOWN_ANCHOR = "UnknownAnchor"
    EMPTY_FAMILY = "EmptyFamily"
    FAMILY_INVALID = "FamilyInvalid"
    ZERO_ETA = "ZeroEta"

    # transmissible parameters
    ARITY_EXCEEDS_SPACE = "ArityExceedsSpace"
    NONPOSITIVE_PARAMETER = "NonpositiveParameter"
    SPACE_TOO_SMALL = "SpaceTooSmall"
    TUPLE_NOT_INJECTIVE = "TupleNotInjective"
    ARITY_TOO_SMALL = "ArityTooSmall"
    UNKNOWN_DESCRIPTOR = "UnknownDescriptor"
    INVALID_EXPRESSION = "InvalidExpression"
    UNKNOWN_PARAMETER = "UnknownParameter"
    INVALID_INDEX = "InvalidIndex"

    # genericity
    NOT_SINGULAR = "NotSingular"
    NO_SMALL_CLUSTER = "NoSmallCluster"
    CARDINALITY_MISMATCH = "CardinalityMismatch"
    TOO_LARGE = "TooLarge"
    TARGET_TOO_LARGE = "TargetTooLarge"
    DEGENERATE_TARGET = "DegenerateTarget"


class MetricError(ValueError):
    """
    Base class of every domain error raised by metric_amalgam.

    :param code: Structured error code.
    :param message: Human readable description.
    :param details: Optional JSON-serialisable context (labels, indices, values).
    """

    def __init__(self, code: ErrorCode, message: str, **details: Any) -> None:
        super().__init__(message)
        self.code = code
        self.message = message
        self.details = details

    def to_dict(self) -> dict[str, Any]:
        """
        Serialise the error for the command line.

        :return: Dictionary with error code, message and details.
        """
        return {
            "error": self.code.value,
            "message": self.message,
            "details": {key: _jsonable(value) for key, value in self.details.items()},
        }


@dataclass(frozen=True)
class Violation:
    """
    One failed metric axiom, as reported by check_metric.

    Indices refer to positions in the label list; labels are kept for reporting.
    """
    code: ErrorCode
    labels: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict[str, Any]:
        return {"code": self.code.value, "labels": list(self.labels)}


class InvalidMetricError(MetricError):
    """
    Raised by validate when a matrix is not a metric; carries every violation.
    """

    def __init__(self, violations: list[Violation]) -> None:
        first = violations[0]
        code = first.code if len({v.code for v in violations}) == 1 else ErrorCode.INVALID_METRIC
        super().__init__(
            code,
            f"Matrix is not a metric: {len(violations)} violation(s), first {first.code.value}"
            f"{first.labels}",
            violations=[v.to_dict() for v in violations],
        )
        self.violations = violations


def _jsonable(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)
