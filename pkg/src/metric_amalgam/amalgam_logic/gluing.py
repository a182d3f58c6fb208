"""
Amalgamation of finite metric spaces.

Explicit gluing formulas: bridged doubles, amalgamation over a shared part,
disjoint amalgamation with a separation constant, disjoint sums and the
support gluing that feeds the interpolation construction. Every infimum runs
over a finite index set and is computed exactly as a min.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

from loguru import logger

from metric_amalgam.amalgam_logic.core import (
    FinMetric,
    make_metric,
    restrict,
    sup_dist,
)
from metric_amalgam.amalgam_logic.errors import ErrorCode, MetricError
from metric_amalgam.utils.parallel import ordered_map
from metric_amalgam.utils.scalar import format_scalar, parse_scalar


def copy_label(label: str, block: int) -> str:
    """Fresh label of the copy of a point in block `block`."""
    return f"{label}#copy{block}"


# ===============================================================================
# TYPES
# ===============================================================================

@dataclass(frozen=True)
class SubsetFamily:
    """
    Pairwise disjoint nonempty label subsets of one metric space.
    """
    parts: tuple[tuple[str, ...], ...]

    @classmethod
    def of(cls, parts: Sequence[Sequence[str]]) -> "SubsetFamily":
        return cls(tuple(tuple(part) for part in parts))

    def __len__(self) -> int:
        return len(self.parts)

    @property
    def support(self) -> tuple[str, ...]:
        """Union of the parts, in family order."""
        return tuple(label for part in self.parts for label in part)

    def check(self, d: FinMetric) -> None:
        """
        Verify the family lives on d and is pairwise disjoint.

        :raises MetricError: FamilyInvalid describing the first problem.
        """
        seen: dict[str, int] = {}
        for i, part in enumerate(self.parts):
            if not part:
                logger.error(f"SubsetFamily.check(): Part {i} is empty.")
                raise MetricError(ErrorCode.FAMILY_INVALID, f"Part {i} is empty.", part=i)
            for label in part:
                if label not in d:
                    logger.error(f"SubsetFamily.check(): Part {i} names unknown point {label!r}.")
                    raise MetricError(ErrorCode.FAMILY_INVALID, f"Part {i} names unknown point {label!r}.",
                                      part=i, label=label)
                if label in seen:
                    logger.error(f"SubsetFamily.check(): Point {label!r} lies in parts {seen[label]} and {i}.")
                    raise MetricError(ErrorCode.FAMILY_INVALID,
                                      f"Point {label!r} lies in parts {seen[label]} and {i}.",
                                      label=label, parts=[seen[label], i])
                seen[label] = i

    def to_dict(self) -> dict[str, Any]:
        return {"parts": [list(part) for part in self.parts]}


@dataclass(frozen=True)
class BridgedDouble:
    """
    Two metrics on one point set realised on X and a fresh copy X1, with each
    point at distance r/2 from its copy.
    """
    base: FinMetric
    second: FinMetric
    copy_map: dict[str, str]
    glued: FinMetric
    bridge: Fraction

    def to_dict(self) -> dict[str, Any]:
        return {
            "bridge": format_scalar(self.bridge),
            "copy_map": dict(self.copy_map),
            "metric": self.glued.to_dict(),
        }


@dataclass(frozen=True)
class SupportGluing:
    """
    Metric on X plus copies B_i of the parts A_i, with d on X, e_i on B_i and
    every x in A_i at distance eta/2 from its copy.
    """
    base: FinMetric
    family: SubsetFamily
    targets: tuple[FinMetric, ...]
    copy_maps: tuple[dict[str, str], ...]
    doubles: tuple[BridgedDouble, ...]
    glued: FinMetric
    eta: Fraction

    def copy_of(self, label: str) -> str | None:
        """Copy label of a support point, None off the support."""
        for mapping in self.copy_maps:
            if label in mapping:
                return mapping[label]
        return None

    def to_dict(self) -> dict[str, Any]:
        return {
            "eta": format_scalar(self.eta),
            "family": self.family.to_dict(),
            "copy_maps": [dict(mapping) for mapping in self.copy_maps],
            "metric": self.glued.to_dict(),
        }


# ===============================================================================
# GLUING OPERATIONS
# ===============================================================================

def bridge_double(d: FinMetric, e: FinMetric, r: Any, block: int = 0) -> BridgedDouble:
    """
    Glue d on X and e on a fresh copy of X with bridge length r/2.

    Cross distances are h(x, tau(y)) = min over a of d(x, a) + r/2 + e(a, y).

    :param d: Metric on X.
    :param e: Second metric on the same labels.
    :param r: Bridge constant with r > 0 and r >= sup_dist(d, e).
    :param block: Index used in the copy labels.
    :raises MetricError: LabelMismatch, NonpositiveBridge, BridgeTooSmall, LabelCollision.
    """
    bridge = parse_scalar(r)
    if bridge <= 0:
        logger.error(f"bridge_double(): Bridge must be positive, got {bridge}.")
        raise MetricError(ErrorCode.NONPOSITIVE_BRIDGE, f"Bridge must be positive, got {bridge}.",
                          r=format_scalar(bridge))
    gap = sup_dist(d, e)
    if bridge < gap:
        logger.error(f"bridge_double(): Bridge {bridge} is smaller than the sup distance {gap}.")
        raise MetricError(ErrorCode.BRIDGE_TOO_SMALL,
                          f"Bridge {bridge} is smaller than the sup distance {gap}.",
                          r=format_scalar(bridge), sup_dist=format_scalar(gap))

    copy_map = {label: copy_label(label, block) for label in d.labels}
    collisions = [label for label in copy_map.values() if label in d]
    if collisions:
        logger.error("bridge_double(): Copy labels collide with existing points.")
        raise MetricError(ErrorCode.LABEL_COLLISION, "Copy labels collide with existing points.",
                          labels=collisions)

    n = d.size
    half = bridge / 2
    e_rows = [[e(x, y) for y in d.labels] for x in d.labels]
    rows = [[Fraction(0)] * (2 * n) for _ in range(2 * n)]
    for i in range(n):
        for j in range(n):
            rows[i][j] = d.dist[i][j]
            rows[n + i][n + j] = e_rows[i][j]
            cross = min(d.dist[i][a] + half + e_rows[a][j] for a in range(n))
            rows[i][n + j] = cross
            rows[n + j][i] = cross

    glued = make_metric(d.labels + tuple(copy_map[label] for label in d.labels), rows)
    logger.debug(f"bridge_double(): {n} points, bridge {bridge}")
    return BridgedDouble(base=d, second=e, copy_map=copy_map, glued=glued, bridge=bridge)


def amalgam_shared(d_x: FinMetric, d_y: FinMetric) -> FinMetric:
    """
    Amalgamate two metrics agreeing on their common points Z.

    Cross distances are min over z in Z of d_x(x, z) + d_y(z, y). Labels of
    d_x come first, followed by the labels only in d_y.

    :raises MetricError: DisjointLabelSets, OverlapDisagreement.
    """
    shared = [label for label in d_x.labels if label in d_y]
    if not shared:
        logger.error("amalgam_shared(): Shared amalgamation needs common points.")
        raise MetricError(ErrorCode.DISJOINT_LABEL_SETS, "Shared amalgamation needs common points.")
    for i, z in enumerate(shared):
        for w in shared[i + 1:]:
            if d_x(z, w) != d_y(z, w):
                logger.error(f"amalgam_shared(): Metrics disagree on the shared pair ({z!r}, {w!r}).")
                raise MetricError(ErrorCode.OVERLAP_DISAGREEMENT,
                                  f"Metrics disagree on the shared pair ({z!r}, {w!r}).",
                                  labels=[z, w], left=format_scalar(d_x(z, w)), right=format_scalar(d_y(z, w)))

    extra = [label for label in d_y.labels if label not in d_x]
    labels = d_x.labels + tuple(extra)
    n_x = d_x.size
    shared_x = [d_x.index(z) for z in shared]
    shared_y = [d_y.index(z) for z in shared]
    extra_y = [d_y.index(y) for y in extra]

    rows = [[Fraction(0)] * len(labels) for _ in labels]
    for i in range(n_x):
        for j in range(n_x):
            rows[i][j] = d_x.dist[i][j]
    for a, ya in enumerate(extra_y):
        for b, yb in enumerate(extra_y):
            rows[n_x + a][n_x + b] = d_y.dist[ya][yb]
        for i in range(n_x):
            cross = min(d_x.dist[i][zx] + d_y.dist[zy][ya] for zx, zy in zip(shared_x, shared_y))
            rows[i][n_x + a] = cross
            rows[n_x + a][i] = cross
    logger.debug(f"amalgam_shared(): |X|={n_x}, |Y|={d_y.size}, |Z|={len(shared)}")
    return make_metric(labels, rows)


def amalgam_disjoint(d_x: FinMetric, d_y: FinMetric, r: Any,
                     a: str | None = None, b: str | None = None) -> FinMetric:
    """
    Amalgamate metrics on disjoint sets with every cross distance at least r.

    Cross distances are d_x(x, a) + r + d_y(b, y) for anchors a in X, b in Y
    (default: the first labels).

    :raises MetricError: LabelCollision, NonpositiveSeparation, UnknownAnchor.
    """
    separation = parse_scalar(r)
    collisions = [label for label in d_x.labels if label in d_y]
    if collisions:
        logger.error("amalgam_disjoint(): Disjoint amalgamation needs disjoint label sets.")
        raise MetricError(ErrorCode.LABEL_COLLISION, "Disjoint amalgamation needs disjoint label sets.",
                          labels=collisions)
    if separation <= 0:
        logger.error(f"amalgam_disjoint(): Separation must be positive, got {separation}.")
        raise MetricError(ErrorCode.NONPOSITIVE_SEPARATION, f"Separation must be positive, got {separation}.",
                          r=format_scalar(separation))
    anchor_a = d_x.labels[0] if a is None else a
    anchor_b = d_y.labels[0] if b is None else b
    if anchor_a not in d_x or anchor_b not in d_y:
        logger.error("amalgam_disjoint(): Anchors must be points of their own side.")
        raise MetricError(ErrorCode.UNKNOWN_ANCHOR, "Anchors must be points of their own side.",
                          a=anchor_a, b=anchor_b)

    n_x, n_y = d_x.size, d_y.size
    to_a = d_x.row(anchor_a)
    from_b = d_y.row(anchor_b)
    rows = [[Fraction(0)] * (n_x + n_y) for _ in range(n_x + n_y)]
    for i in range(n_x):
        for j in range(n_x):
            rows[i][j] = d_x.dist[i][j]
    for i in range(n_y):
        for j in range(n_y):
            rows[n_x + i][n_x + j] = d_y.dist[i][j]
    for i in range(n_x):
        for j in range(n_y):
            cross = to_a[i] + separation + from_b[j]
            rows[i][n_x + j] = cross
            rows[n_x + j][i] = cross
    return make_metric(d_x.labels + d_y.labels, rows)


def disjoint_sum(family: Sequence[FinMetric]) -> FinMetric:
    """
    Metric on the disjoint union restricting to every block, blocks at least 1 apart.

    A left fold of amalgam_disjoint with r = 1 and first-label anchors.

    :raises MetricError: EmptyFamily, LabelCollision.
    """
    if not family:
        logger.error("disjoint_sum(): Disjoint sum of an empty family.")
        raise MetricError(ErrorCode.EMPTY_FAMILY, "Disjoint sum of an empty family.")
    total = family[0]
    for block in family[1:]:
        total = amalgam_disjoint(total, block, 1)
    logger.debug(f"disjoint_sum(): {len(family)} blocks, {total.size} points")
    return total


def support_gluing(d: FinMetric, family: SubsetFamily, targets: Sequence[FinMetric],
                   threads: int | None = 1) -> SupportGluing:
    """
    Glue copies of the target metrics onto (X, d) at distance eta/2 from their parts.

    Builds the bridged double of (d|A_i, e_i) with bridge eta for every part,
    then amalgamates each double onto the growing space along A_i.

    :param d: Base metric.
    :param family: Disjoint parts A_i of d's points.
    :param targets: Metric e_i on the labels of A_i, one per part.
    :param threads: Workers for the per-block doubles.
    :raises MetricError: FamilyInvalid, LabelMismatch, ZeroEta, LabelCollision.
    """
    family.check(d)
    if len(targets) != len(family):
        logger.error(f"support_gluing(): {len(family)} parts but {len(targets)} target metrics.")
        raise MetricError(ErrorCode.FAMILY_INVALID,
                          f"{len(family)} parts but {len(targets)} target metrics.")
    bases = [restrict(d, part) for part in family.parts]
    eta = max(sup_dist(target, base) for target, base in zip(targets, bases))
    if eta == 0:
        logger.error("support_gluing(): Targets agree with d on every part (eta = 0).")
        raise MetricError(ErrorCode.ZERO_ETA, "Targets agree with d on every part (eta = 0).")

    for i, part in enumerate(family.parts):
        collisions = [copy_label(label, i) for label in part if copy_label(label, i) in d]
        if collisions:
            logger.error("support_gluing(): Copy labels collide with existing points.")
            raise MetricError(ErrorCode.LABEL_COLLISION, "Copy labels collide with existing points.",
                              labels=collisions)

    doubles = ordered_map(
        lambda i: bridge_double(bases[i], targets[i], eta, block=i),
        range(len(family)),
        threads,
    )
    glued = d
    for double in doubles:
        glued = amalgam_shared(glued, double.glued)

    logger.debug(f"support_gluing(): {len(family)} parts, eta {eta}, {glued.size} points")
    return SupportGluing(
        base=d,
        family=family,
        targets=tuple(targets),
        copy_maps=tuple(double.copy_map for double in doubles),
        doubles=tuple(doubles),
        glued=glued,
        eta=eta,
    )
