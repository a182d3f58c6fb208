"""
Metric interpolation on finite spaces.

Given d on X and metrics e_i on disjoint parts A_i, interpolate produces m on X
with m|A_i = e_i for every i and sup_dist(m, d) = eta, the largest per-part
sup distance. The construction follows the gluing / embedding route:

1. support_gluing builds h on X plus copies B_i (copies at distance eta/2);
2. H is the based Kuratowski embedding of h;
3. the selection F sends x in A_i to H(copy of x) and every other x to H(x);
4. r extends the disjoint sum of the e_i to X with a constant bridge,
   l = min(r, eta/2) and m(x, y) = max(|F(x) - F(y)|, l(x, y)).
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Sequence

from loguru import logger

from metric_amalgam.amalgam_logic.core import (
    EmbeddedPoints,
    EmbeddingMode,
    FinMetric,
    diam,
    kuratowski,
    make_metric,
    min_cap,
    restrict,
    sup_dist,
    validate,
)
from metric_amalgam.amalgam_logic.errors import ErrorCode, MetricError
from metric_amalgam.amalgam_logic.gluing import (
    SubsetFamily,
    SupportGluing,
    disjoint_sum,
    support_gluing,
)
from metric_amalgam.utils.scalar import format_scalar


# ===============================================================================
# RESULT TYPES
# ===============================================================================

@dataclass(frozen=True)
class InterpolationTrace:
    """
    Intermediate objects of the construction, exposed for inspection and tests.
    """
    gluing: SupportGluing
    embedding: EmbeddedPoints
    selection: EmbeddedPoints
    extension: FinMetric
    cap: FinMetric
    combined: EmbeddedPoints


@dataclass(frozen=True)
class InterpolationResult:
    """
    Interpolated metric m with its sup distance eta to the base metric.
    """
    m: FinMetric
    eta: Fraction
    witness_pair: tuple[str, str] | None
    trace: InterpolationTrace | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "metric": self.m.to_dict(),
            "eta": format_scalar(self.eta),
            "witness_pair": list(self.witness_pair) if self.witness_pair else None,
        }


# ===============================================================================
# OPERATIONS
# ===============================================================================

def constant_bridge_extend(e: FinMetric, x_labels: Sequence[str], d: FinMetric | None = None) -> FinMetric:
    """
    Extend a metric on A to X keeping e on A; every distance involving a point
    outside A equals C = max(diam(e)/2, 1).

    :param e: Metric on A.
    :param x_labels: Labels of X (output order).
    :param d: Optional metric on X; only its label set is checked.
    :raises MetricError: SubsetNotContained if A is not inside X.
    """
    labels = tuple(x_labels)
    if d is not None and set(d.labels) != set(labels):
        logger.error("constant_bridge_extend(): x_labels must be the points of d.")
        raise MetricError(ErrorCode.LABEL_MISMATCH, "x_labels must be the points of d.")
    outside = [label for label in e.labels if label not in labels]
    if outside:
        logger.error("constant_bridge_extend(): Extended subset is not contained in X.")
        raise MetricError(ErrorCode.SUBSET_NOT_CONTAINED, "Extended subset is not contained in X.",
                          labels=outside)
    constant = max(diam(e) / 2, Fraction(1))
    rows = []
    for x in labels:
        row = []
        for y in labels:
            if x == y:
                row.append(Fraction(0))
            elif x in e and y in e:
                row.append(e(x, y))
            else:
                row.append(constant)
        rows.append(row)
    return make_metric(labels, rows)


def _witness_pair(d: FinMetric, family: SubsetFamily, targets: Sequence[FinMetric],
                  eta: Fraction) -> tuple[str, str] | None:
    for part, target in zip(family.parts, targets):
        for i, x in enumerate(part):
            for y in part[i + 1:]:
                if abs(target(x, y) - d(x, y)) == eta:
                    return (x, y)
    return None


def interpolate(d: FinMetric, family: SubsetFamily, targets: Sequence[FinMetric],
                threads: int | None = 1) -> InterpolationResult:
    """
    Interpolate target metrics on disjoint parts into d with minimal sup distance.

    :param d: Base metric on X.
    :param family: Disjoint parts A_i.
    :param targets: Metric e_i on A_i, one per part.
    :param threads: Workers for the per-part gluing stage.
    :return: m with m|A_i = e_i and sup_dist(m, d) = eta.
    :raises MetricError: FamilyInvalid, LabelMismatch.
    """
    family.check(d)
    if len(targets) != len(family):
        logger.error(f"interpolate(): {len(family)} parts but {len(targets)} target metrics.")
        raise MetricError(ErrorCode.FAMILY_INVALID, f"{len(family)} parts but {len(targets)} target metrics.")
    eta = max((sup_dist(target, restrict(d, part)) for part, target in zip(family.parts, targets)),
              default=Fraction(0))
    logger.debug(f"interpolate(): |X|={d.size}, {len(family)} part(s), eta={eta}")
    if eta == 0:
        logger.info("interpolate(): targets already agree with d, returning d")
        return InterpolationResult(m=d, eta=eta, witness_pair=None, trace=None)

    gluing = support_gluing(d, family, targets, threads=threads)
    embedding = kuratowski(gluing.glued, EmbeddingMode.BASED)
    selection = EmbeddedPoints(
        d.labels,
        tuple(embedding.vector(gluing.copy_of(x) or x) for x in d.labels),
    )

    extension = constant_bridge_extend(disjoint_sum(list(targets)), d.labels, d)
    cap = min_cap(extension, eta / 2)
    combined = selection.concat(kuratowski(cap, EmbeddingMode.BOUNDED))
    m = combined.distances().to_metric()

    witness = _witness_pair(d, family, targets, eta)
    logger.info(f"interpolate(): built m on {m.size} points with eta={eta}")
    return InterpolationResult(
        m=m,
        eta=eta,
        witness_pair=witness,
        trace=InterpolationTrace(
            gluing=gluing,
            embedding=embedding,
            selection=selection,
            extension=extension,
            cap=cap,
            combined=combined,
        ),
    )


def interpolate_single(d: FinMetric, subset: Sequence[str], e: FinMetric,
                       threads: int | None = 1) -> InterpolationResult:
    """
    One-part interpolation: m|A = e and sup_dist(m, d) = sup_dist(e, d|A).
    """
    return interpolate(d, SubsetFamily.of([tuple(subset)]), [e], threads=threads)


# ===============================================================================
# BUILDER PATTERN
# ===============================================================================

class InterpolationBuilder:
    """
    Fluent construction of an interpolation problem.

    Example:
        result = (InterpolationBuilder(d)
            .with_block(["x1", "x2"], e)
            .with_block_matrix(["x5", "x6"], [["0", "2"], ["2", "0"]])
            .build())
    """

    def __init__(self, base: FinMetric):
        """
        Initialize builder.

        :param base: The metric being interpolated into.
        """
        self._base = base
        self._parts: list[tuple[str, ...]] = []
        self._targets: list[FinMetric] = []
        self._config_dict: Dict[str, Any] = {'threads': 1}

    def with_block(self, labels: Sequence[str], metric: FinMetric) -> 'InterpolationBuilder':
        """
        Add a part with its target metric.

        :param labels: Points of the part.
        :param metric: Target metric on those points.
        :return: Builder instance for chaining.
        """
        self._parts.append(tuple(labels))
        self._targets.append(metric)
        return self

    def with_block_matrix(self, labels: Sequence[str], matrix: Sequence[Sequence[Any]]) -> 'InterpolationBuilder':
        """
        Add a part whose target is given as a raw matrix (validated here).

        :return: Builder instance for chaining.
        """
        return self.with_block(labels, validate(labels, matrix))

    def with_threads(self, threads: int | None) -> 'InterpolationBuilder':
        """
        Set the worker count for the gluing stage.

        :return: Builder instance for chaining.
        """
        self._config_dict['threads'] = threads
        return self

    def build(self) -> InterpolationResult:
        """
        Run the interpolation.

        :return: InterpolationResult for the collected parts.
        """
        family = SubsetFamily(tuple(self._parts))
        return interpolate(self._base, family, self._targets, threads=self._config_dict['threads'])
