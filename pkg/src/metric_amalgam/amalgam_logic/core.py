"""
Exact finite metric spaces.

A FinMetric is an ordered list of distinct labels plus a symmetric matrix of
Fractions. Instances are immutable; every operation returns a new value.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations
from typing import Any, Iterable, Iterator, Mapping, Sequence

from loguru import logger

from metric_amalgam.amalgam_logic.errors import (
    ErrorCode,
    InvalidMetricError,
    MetricError,
    Violation,
)
from metric_amalgam.utils.scalar import format_scalar, parse_scalar

Matrix = tuple[tuple[Fraction, ...], ...]


class EmbeddingMode(Enum):
    """
    Kuratowski embedding variants.
    """
    BASED = "based"
    BOUNDED = "bounded"


# ===============================================================================
# METRIC TYPES
# ===============================================================================

@dataclass(frozen=True)
class PseudoFinMetric:
    """
    Labelled symmetric matrix with zero diagonal, nonnegative entries and the
    triangle inequality; off-diagonal zeros are allowed.

    Construction only checks the shape and label uniqueness; use check_metric
    or validate for the full axiom check.
    """
    labels: tuple[str, ...]
    dist: Matrix
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(set(self.labels)) != len(self.labels):
            raise MetricError(ErrorCode.DUPLICATE_LABEL, "Labels must be distinct.", labels=list(self.labels))
        if len(self.dist) != len(self.labels) or any(len(row) != len(self.labels) for row in self.dist):
            raise MetricError(ErrorCode.NON_SQUARE, "Distance matrix must be square and match the labels.")
        object.__setattr__(self, "_index", {label: i for i, label in enumerate(self.labels)})

    # ==================== Accessors ====================

    @property
    def size(self) -> int:
        """Number of points."""
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label: object) -> bool:
        return label in self._index

    def index(self, label: str) -> int:
        """
        Position of a label.

        :raises MetricError: UnknownLabel if the label is not a point.
        """
        try:
            return self._index[label]
        except KeyError:
            raise MetricError(ErrorCode.UNKNOWN_LABEL, f"Unknown label: {label!r}", label=label) from None

    def d(self, x: str, y: str) -> Fraction:
        """Distance between two labels."""
        return self.dist[self.index(x)][self.index(y)]

    def __call__(self, x: str, y: str) -> Fraction:
        return self.d(x, y)

    def row(self, label: str) -> tuple[Fraction, ...]:
        """Distances from one point to every point, in label order."""
        return self.dist[self.index(label)]

    def pairs(self) -> Iterator[tuple[str, str]]:
        """Unordered pairs of distinct labels, in label order."""
        return combinations(self.labels, 2)

    def values(self) -> list[Fraction]:
        """Off-diagonal upper-triangle entries, in label order."""
        return [self.dist[i][j] for i, j in combinations(range(self.size), 2)]

    def is_metric(self) -> bool:
        """Check strict positivity off the diagonal (the other axioms are assumed)."""
        return all(value > 0 for value in self.values())

    def to_metric(self) -> "FinMetric":
        """
        Promote to a FinMetric after checking strict positivity.

        :raises MetricError: ZeroOffDiagonal naming the first zero pair.
        """
        for i, j in combinations(range(self.size), 2):
            if self.dist[i][j] <= 0:
                raise MetricError(
                    ErrorCode.ZERO_OFF_DIAGONAL,
                    f"Zero distance between distinct points {self.labels[i]!r} and {self.labels[j]!r}.",
                    labels=[self.labels[i], self.labels[j]],
                )
        return FinMetric(self.labels, self.dist)

    def to_dict(self) -> dict[str, Any]:
        """Serialise to the JSON document shape with "p/q" scalars."""
        return {
            "points": list(self.labels),
            "matrix": [[format_scalar(value) for value in row] for row in self.dist],
        }


class FinMetric(PseudoFinMetric):
    """
    Finite metric space: a PseudoFinMetric with strictly positive off-diagonal
    entries.
    """


def _matrix(rows: Iterable[Iterable[Fraction]]) -> Matrix:
    return tuple(tuple(row) for row in rows)


def make_metric(labels: Sequence[str], rows: Iterable[Iterable[Fraction]]) -> FinMetric:
    """
    Build a FinMetric from values already known to satisfy the axioms.

    Used by the constructions whose output is a metric by proof; tests run
    validate on them.
    """
    return FinMetric(tuple(labels), _matrix(rows))


# ===============================================================================
# VALIDATION
# ===============================================================================

def check_metric(labels: Sequence[str], matrix: Sequence[Sequence[Any]], strict: bool = True) -> list[Violation]:
    """
    List every violated metric axiom.

    :param labels: Point labels in matrix order.
    :param matrix: Square matrix of scalars (strings, ints or Fractions).
    :param strict: Require positive off-diagonal entries (False checks a pseudometric).
    :return: Violations; empty iff the matrix is a (pseudo)metric.
    :raises MetricError: InvalidScalar if an entry cannot be parsed.
    """
    labels = tuple(labels)
    n = len(labels)
    if len(matrix) != n or any(len(row) != n for row in matrix):
        return [Violation(ErrorCode.NON_SQUARE)]
    violations: list[Violation] = []
    if len(set(labels)) != n:
        seen: set[str] = set()
        for label in labels:
            if label in seen:
                violations.append(Violation(ErrorCode.DUPLICATE_LABEL, (label,)))
            seen.add(label)

    values = [[parse_scalar(entry) for entry in row] for row in matrix]

    for i in range(n):
        if values[i][i] != 0:
            violations.append(Violation(ErrorCode.NONZERO_DIAGONAL, (labels[i],)))
    for i in range(n):
        for j in range(n):
            if i != j and values[i][j] < 0:
                violations.append(Violation(ErrorCode.NEGATIVE_ENTRY, (labels[i], labels[j])))
    for i, j in combinations(range(n), 2):
        if values[i][j] != values[j][i]:
            violations.append(Violation(ErrorCode.ASYMMETRIC_PAIR, (labels[i], labels[j])))
        elif strict and values[i][j] == 0:
            violations.append(Violation(ErrorCode.ZERO_OFF_DIAGONAL, (labels[i], labels[j])))
    for i, k in combinations(range(n), 2):
        for j in range(n):
            if j in (i, k):
                continue
            if values[i][k] > values[i][j] + values[j][k]:
                violations.append(Violation(ErrorCode.TRIANGLE_VIOLATION, (labels[i], labels[j], labels[k])))
    return violations


def validate(labels: Sequence[str], matrix: Sequence[Sequence[Any]]) -> FinMetric:
    """
    Parse and check a labelled matrix.

    :param labels: Point labels in matrix order.
    :param matrix: Square matrix of scalars.
    :return: The validated FinMetric.
    :raises InvalidMetricError: Listing every violated pair or triple.
    """
    violations = check_metric(labels, matrix)
    if violations:
        logger.debug(f"validate(): {len(violations)} violation(s) in {len(labels)}-point matrix")
        raise InvalidMetricError(violations)
    return make_metric(labels, ([parse_scalar(entry) for entry in row] for row in matrix))


def revalidate(metric: PseudoFinMetric) -> FinMetric:
    """
    Run the full axiom check on an existing matrix.

    :raises InvalidMetricError: If any axiom fails.
    """
    return validate(metric.labels, metric.dist)


# ===============================================================================
# ELEMENTARY CALCULUS
# ===============================================================================

def _require_same_labels(d: PseudoFinMetric, e: PseudoFinMetric) -> None:
    if set(d.labels) != set(e.labels):
        raise MetricError(
            ErrorCode.LABEL_MISMATCH,
            "Metrics are defined on different label sets.",
            left=sorted(d.labels),
            right=sorted(e.labels),
        )


def sup_dist(d: PseudoFinMetric, e: PseudoFinMetric) -> Fraction:
    """
    Supremum distance between two metrics on the same points.

    :return: max over pairs of |d(x, y) - e(x, y)|, 0 for a single point.
    :raises MetricError: LabelMismatch.
    """
    _require_same_labels(d, e)
    return max((abs(d(x, y) - e(x, y)) for x, y in d.pairs()), default=Fraction(0))


def capped_sup_dist(d: PseudoFinMetric, e: PseudoFinMetric) -> Fraction:
    """Bounded variant min(1, sup_dist(d, e)); induces the same topology."""
    return min(Fraction(1), sup_dist(d, e))


def _subset(d: PseudoFinMetric, subset: Iterable[str] | None) -> tuple[str, ...]:
    if subset is None:
        return d.labels
    if isinstance(subset, (set, frozenset)):
        for label in subset:
            d.index(label)
        points = tuple(label for label in d.labels if label in subset)
    else:
        points = tuple(subset)
        for label in points:
            d.index(label)
        if len(set(points)) != len(points):
            raise MetricError(ErrorCode.DUPLICATE_LABEL, "Subset lists a label twice.", labels=list(points))
    return points


def diam(d: PseudoFinMetric, subset: Iterable[str] | None = None) -> Fraction:
    """
    Diameter of a nonempty subset (the whole space by default).

    :raises MetricError: EmptySubset, UnknownLabel.
    """
    points = _subset(d, subset)
    if not points:
        raise MetricError(ErrorCode.EMPTY_SUBSET, "Diameter of an empty subset is undefined.")
    return max((d(x, y) for x, y in combinations(points, 2)), default=Fraction(0))


def min_sep(d: PseudoFinMetric, subset: Iterable[str] | None = None) -> Fraction:
    """
    Smallest distance between distinct points of a subset.

    :raises MetricError: SubsetTooSmall when fewer than two points are given.
    """
    points = _subset(d, subset)
    if len(points) < 2:
        raise MetricError(ErrorCode.SUBSET_TOO_SMALL, "Minimum separation needs at least two points.",
                          size=len(points))
    return min(d(x, y) for x, y in combinations(points, 2))


def restrict(d: FinMetric, subset: Iterable[str]) -> FinMetric:
    """
    Induced metric on a subset.

    Sequences keep their order; sets follow the order of d.

    :raises MetricError: EmptySubset, UnknownLabel.
    """
    points = _subset(d, subset)
    if not points:
        raise MetricError(ErrorCode.EMPTY_SUBSET, "Cannot restrict to an empty subset.")
    idx = [d.index(label) for label in points]
    return make_metric(points, ((d.dist[i][j] for j in idx) for i in idx))


def _positive(c: Any) -> Fraction:
    value = parse_scalar(c)
    if value <= 0:
        raise MetricError(ErrorCode.NONPOSITIVE_CONSTANT, f"Constant must be positive, got {value}.",
                          value=format_scalar(value))
    return value


def scale(d: FinMetric, c: Fraction | int | str) -> FinMetric:
    """
    Multiply every distance by c > 0.

    :raises MetricError: NonpositiveConstant.
    """
    factor = _positive(c)
    return make_metric(d.labels, ((value * factor for value in row) for row in d.dist))


def min_cap(d: FinMetric, c: Fraction | int | str) -> FinMetric:
    """
    Truncate every off-diagonal distance at c > 0; min(d, c) is again a metric.

    :raises MetricError: NonpositiveConstant.
    """
    cap = _positive(c)
    return make_metric(
        d.labels,
        ((min(value, cap) if i != j else value for j, value in enumerate(row)) for i, row in enumerate(d.dist)),
    )


def relabel(d: FinMetric, mapping: Mapping[str, str]) -> FinMetric:
    """
    Transport a metric along a label bijection.

    :param mapping: Old label -> new label; must cover every label.
    :raises MetricError: UnknownLabel if a label is missing, LabelCollision if not injective.
    """
    missing = [label for label in d.labels if label not in mapping]
    if missing:
        raise MetricError(ErrorCode.UNKNOWN_LABEL, "Relabelling does not cover every point.", labels=missing)
    new_labels = tuple(mapping[label] for label in d.labels)
    if len(set(new_labels)) != len(new_labels):
        raise MetricError(ErrorCode.LABEL_COLLISION, "Relabelling is not injective.", labels=list(new_labels))
    return FinMetric(new_labels, d.dist)


# ===============================================================================
# KURATOWSKI EMBEDDINGS
# ===============================================================================

@dataclass(frozen=True)
class EmbeddedPoints:
    """
    Points of a sup-norm coordinate space, one vector per label.
    """
    labels: tuple[str, ...]
    coords: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        if len(self.coords) != len(self.labels):
            raise MetricError(ErrorCode.NON_SQUARE, "One coordinate vector per label is required.")
        if len({len(vector) for vector in self.coords}) > 1:
            raise MetricError(ErrorCode.NON_SQUARE, "Coordinate vectors must share one dimension.")

    @property
    def dimension(self) -> int:
        return len(self.coords[0]) if self.coords else 0

    def vector(self, label: str) -> tuple[Fraction, ...]:
        """Coordinate vector of a label."""
        try:
            return self.coords[self.labels.index(label)]
        except ValueError:
            raise MetricError(ErrorCode.UNKNOWN_LABEL, f"Unknown label: {label!r}", label=label) from None

    def sup_diff(self, x: str, y: str) -> Fraction:
        """Sup-norm distance between the vectors of two labels."""
        return sup_norm_diff(self.vector(x), self.vector(y))

    def distances(self) -> PseudoFinMetric:
        """Pairwise sup-norm differences (always a pseudometric)."""
        n = len(self.labels)
        rows = [[Fraction(0)] * n for _ in range(n)]
        for i, j in combinations(range(n), 2):
            rows[i][j] = rows[j][i] = sup_norm_diff(self.coords[i], self.coords[j])
        return PseudoFinMetric(self.labels, _matrix(rows))

    def concat(self, other: "EmbeddedPoints") -> "EmbeddedPoints":
        """
        Coordinate concatenation (the max-norm product of the two spaces).

        :raises MetricError: LabelMismatch if the label lists differ.
        """
        if self.labels != other.labels:
            raise MetricError(ErrorCode.LABEL_MISMATCH, "Concatenated embeddings must share labels.")
        return EmbeddedPoints(self.labels, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def to_dict(self) -> dict[str, Any]:
        return {
            "points": list(self.labels),
            "coords": [[format_scalar(value) for value in vector] for vector in self.coords],
        }


def sup_norm_diff(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    """Sup norm of u - v."""
    return max((abs(a - b) for a, b in zip(u, v)), default=Fraction(0))


def kuratowski(d: PseudoFinMetric, mode: EmbeddingMode | str = EmbeddingMode.BASED,
               base: str | None = None) -> EmbeddedPoints:
    """
    Isometric embedding into (Q^n, sup norm).

    Based mode maps x to d_x - d_o (o defaults to the first label); bounded
    mode maps x to d_x.

    :raises MetricError: UnknownLabel if the base point is not a label.
    """
    mode = EmbeddingMode(mode)
    if mode is EmbeddingMode.BOUNDED:
        return EmbeddedPoints(d.labels, d.dist)
    origin = d.row(base if base is not None else d.labels[0])
    return EmbeddedPoints(
        d.labels,
        tuple(tuple(a - b for a, b in zip(row, origin)) for row in d.dist),
    )


# ===============================================================================
# STANDARD SPACES
# ===============================================================================

def line_metric(points: Sequence[Any], labels: Sequence[str] | None = None) -> FinMetric:
    """
    Subset of the real line with |s - t| distances.

    :param points: Distinct coordinates (anything parse_scalar accepts).
    :param labels: Optional labels; default is the formatted coordinate.
    """
    values = [parse_scalar(point) for point in points]
    names = tuple(labels) if labels is not None else tuple(format_scalar(value) for value in values)
    metric = PseudoFinMetric(names, _matrix([[abs(a - b) for b in values] for a in values]))
    return metric.to_metric()


def equilateral(labels: Sequence[str] | int, c: Any = 1) -> FinMetric:
    """
    Space with all distinct-point distances equal to c > 0.

    :param labels: Labels, or a count (labels "0".."n-1").
    """
    names = tuple(str(i) for i in range(labels)) if isinstance(labels, int) else tuple(labels)
    value = _positive(c)
    n = len(names)
    return make_metric(names, ((Fraction(0) if i == j else value for j in range(n)) for i in range(n)))


def cycle_graph_metric(m: int, labels: Sequence[str] | None = None) -> FinMetric:
    """
    Shortest-path metric of the cycle graph on m >= 3 vertices.
    """
    if m < 3:
        raise MetricError(ErrorCode.SPACE_TOO_SMALL, "A cycle graph needs at least three vertices.", m=m)
    names = tuple(labels) if labels is not None else tuple(str(i) for i in range(m))
    return make_metric(
        names,
        ((Fraction(min((i - j) % m, (j - i) % m)) for j in range(m)) for i in range(m)),
    )
