"""
Constructive genericity at finite scale.

- singular_witness / block_space: small violating spaces and the hub-and-blocks
  space assembled from them;
- perturb_to_anti: move any metric with a small cluster, by less than epsilon,
  to a metric satisfying an anti-property;
- labelled distortion (min_distortion, best_scale, richness_search) and the
  pseudo-cone richness parameter built on it.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, count, cycle, islice, permutations, product
from typing import Any, Iterator, Sequence

from loguru import logger

from metric_amalgam.amalgam_logic.config import ScanConfig
from metric_amalgam.amalgam_logic.core import (
    FinMetric,
    check_metric,
    diam,
    make_metric,
    relabel,
    restrict,
    revalidate,
    scale,
    sup_dist,
)
from metric_amalgam.amalgam_logic.errors import ErrorCode, MetricError
from metric_amalgam.amalgam_logic.interpolation import interpolate_single
from metric_amalgam.amalgam_logic.transmissible import (
    TransmissibleParameter,
    Witness,
    anti_witness,
    pad_space,
    parse_assignments,
    positive_parameter,
)
from metric_amalgam.utils.parallel import ordered_map, resolve_threads
from metric_amalgam.utils.scalar import format_scalar, to_jsonable

HUB = "inf"
MAX_DISTORTION_POINTS = 9


# ===============================================================================
# RESULT TYPES
# ===============================================================================

@dataclass(frozen=True)
class SingularWitness:
    """
    Violating space of diameter at most epsilon together with its witness.
    """
    param: str
    q: Any
    z: Fraction
    space: FinMetric
    tuple_labels: tuple[str, ...]
    epsilon: Fraction

    def to_dict(self) -> dict[str, Any]:
        return {
            "param": self.param,
            "q": to_jsonable(self.q),
            "z": format_scalar(self.z),
            "epsilon": format_scalar(self.epsilon),
            "diam": format_scalar(diam(self.space)),
            "space": self.space.to_dict(),
            "tuple": list(self.tuple_labels),
        }


@dataclass(frozen=True)
class BlockSpace:
    """
    Hub plus blocks R_1..R_N; block i sits at distance epsilon * 2**-i from the hub.

    :ivar block_witnesses: Witness of each block, evaluated on the assembled metric.
    """
    blocks: tuple[FinMetric, ...]
    hub: str
    metric: FinMetric
    epsilon: Fraction
    block_witnesses: tuple[Witness, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict[str, Any]:
        return {
            "hub": self.hub,
            "epsilon": format_scalar(self.epsilon),
            "blocks": [list(block.labels) for block in self.blocks],
            "metric": self.metric.to_dict(),
            "block_witnesses": [witness.to_dict() for witness in self.block_witnesses],
        }


@dataclass(frozen=True)
class PerturbationResult:
    """
    Metric m within epsilon of d carrying an anti-property witness inside the cluster.
    """
    m: FinMetric
    witness: Witness
    cluster: tuple[str, ...]
    eta: Fraction

    def to_dict(self) -> dict[str, Any]:
        return {
            "metric": self.m.to_dict(),
            "witness": self.witness.to_dict(),
            "cluster": list(self.cluster),
            "sup_dist": format_scalar(self.eta),
        }


@dataclass(frozen=True)
class RichnessQuery:
    """
    Target finite space F, precision epsilon and an optional fixed scale z.
    """
    target: FinMetric
    epsilon: Fraction
    scale: Fraction | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "epsilon", positive_parameter(self.epsilon, "epsilon"))
        if self.scale is not None:
            object.__setattr__(self, "scale", positive_parameter(self.scale, "z"))


@dataclass(frozen=True)
class RichnessResult:
    """
    Best labelled match of the target found in d.

    :ivar sigma: sigma[i] is the point of d matched to the i-th target point.
    """
    found: bool
    subset: tuple[str, ...] | None
    sigma: tuple[str, ...] | None
    z: Fraction | None
    distortion: Fraction | None
    exhaustive: bool
    scanned: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "found": self.found,
            "subset": list(self.subset) if self.subset else None,
            "sigma": list(self.sigma) if self.sigma else None,
            "z": to_jsonable(self.z),
            "distortion": to_jsonable(self.distortion),
            "exhaustive": self.exhaustive,
            "scanned": self.scanned,
        }


# ===============================================================================
# LABELLED DISTORTION
# ===============================================================================

def _check_pair(d_a: FinMetric, d_f: FinMetric) -> None:
    if d_a.size != d_f.size:
        raise MetricError(ErrorCode.CARDINALITY_MISMATCH, "Compared spaces must have the same cardinality.",
                          left=d_a.size, right=d_f.size)
    if d_a.size > MAX_DISTORTION_POINTS:
        raise MetricError(ErrorCode.TOO_LARGE, f"Bijection search is limited to {MAX_DISTORTION_POINTS} points.",
                          points=d_a.size)


def min_distortion(d_a: FinMetric, d_f: FinMetric) -> tuple[Fraction, tuple[str, ...]]:
    """
    Smallest max_{i<j} |d_a(sigma_i, sigma_j) - d_f(i, j)| over bijections sigma.

    Branch and bound over assignments in lexicographic order; only strict
    improvements are kept, so ties go to the lexicographically first sigma.

    :return: (distortion, sigma) with sigma[i] the point of d_a matched to d_f.labels[i].
    :raises MetricError: CardinalityMismatch, TooLarge.
    """
    _check_pair(d_a, d_f)
    n = d_f.size
    target = d_f.dist
    source = d_a.dist
    best: list[Any] = [None, None]
    assignment: list[int] = []
    used = [False] * n

    def extend(current: Fraction) -> None:
        k = len(assignment)
        if k == n:
            if best[0] is None or current < best[0]:
                best[0], best[1] = current, tuple(assignment)
            return
        for candidate in range(n):
            if used[candidate]:
                continue
            worst = current
            for i in range(k):
                worst = max(worst, abs(source[assignment[i]][candidate] - target[i][k]))
            if best[0] is not None and worst >= best[0]:
                continue
            used[candidate] = True
            assignment.append(candidate)
            extend(worst)
            assignment.pop()
            used[candidate] = False

    extend(Fraction(0))
    sigma = tuple(d_a.labels[i] for i in best[1])
    return best[0], sigma


def best_scale(d_a: FinMetric, d_f: FinMetric, sigma: Sequence[str] | None = None) -> tuple[Fraction, Fraction]:
    """
    Exact z > 0 minimising max_{i<j} |d_a(sigma_i, sigma_j) / z - d_f(i, j)|.

    With w = 1/z each term |w a_k - b_k| is convex with positive slope a_k, so
    at the optimum an increasing and a decreasing term meet (or all vanish):
    the minimiser is among the breakpoints w = (b_k + b_l) / (a_k + a_l),
    pairs with k = l included.

    :param sigma: Points of d_a matched to d_f.labels (default: d_a's order).
    :return: (z, distortion); ties go to the smallest w.
    :raises MetricError: CardinalityMismatch, TooLarge, DegenerateTarget.
    """
    _check_pair(d_a, d_f)
    order = tuple(sigma) if sigma is not None else d_a.labels
    if sorted(order) != sorted(d_a.labels):
        raise MetricError(ErrorCode.LABEL_MISMATCH, "sigma must be a bijection onto the points of d_a.")
    pairs = list(combinations(range(d_f.size), 2))
    a = [d_a(order[i], order[j]) for i, j in pairs]
    b = [d_f.dist[i][j] for i, j in pairs]
    if not pairs:
        raise MetricError(ErrorCode.DEGENERATE_TARGET, "Scale is undefined for one-point spaces.")
    return _best_scale_values(a, b)


def _best_scale_values(a: list[Fraction], b: list[Fraction]) -> tuple[Fraction, Fraction]:
    candidates = sorted({(b[k] + b[l]) / (a[k] + a[l]) for k in range(len(a)) for l in range(k, len(a))})
    best_w, best_value = candidates[0], None
    for w in candidates:
        value = max(abs(w * x - y) for x, y in zip(a, b))
        if best_value is None or value < best_value:
            best_w, best_value = w, value
    assert best_value is not None
    return 1 / best_w, best_value


def _fixed_scale_distortion(a: list[Fraction], b: list[Fraction], z: Fraction) -> Fraction:
    return max((abs(x / z - y) for x, y in zip(a, b)), default=Fraction(0))


def _match_subset(d: FinMetric, subset: tuple[str, ...], target: FinMetric,
                  z: Fraction | None) -> tuple[Fraction, tuple[str, ...], Fraction]:
    pairs = list(combinations(range(target.size), 2))
    b = [target.dist[i][j] for i, j in pairs]
    best: tuple[Fraction, tuple[str, ...], Fraction] | None = None
    for sigma in permutations(subset):
        a = [d(sigma[i], sigma[j]) for i, j in pairs]
        if z is None:
            scale_z, value = _best_scale_values(a, b)
        else:
            scale_z, value = z, _fixed_scale_distortion(a, b, z)
        if best is None or value < best[0]:
            best = (value, sigma, scale_z)
    assert best is not None
    return best


def richness_search(d: FinMetric, query: RichnessQuery, subset_budget: int | None = None,
                    threads: int | None = 1) -> RichnessResult:
    """
    Look for a subset of d that, rescaled by z, matches the target with
    labelled distortion below epsilon.

    Subsets are scanned in lexicographic order of positions, in batches on the
    ordered thread map; the first hit in that order is returned, otherwise the
    best match seen.

    :param subset_budget: Cap on scanned subsets (None: all).
    :raises MetricError: TargetTooLarge, TooLarge.
    """
    target = query.target
    if target.size > d.size:
        raise MetricError(ErrorCode.TARGET_TOO_LARGE, "Target has more points than the space.",
                          target=target.size, points=d.size)
    if target.size > MAX_DISTORTION_POINTS:
        raise MetricError(ErrorCode.TOO_LARGE, f"Targets are limited to {MAX_DISTORTION_POINTS} points.",
                          points=target.size)
    if target.size < 2:
        raise MetricError(ErrorCode.DEGENERATE_TARGET, "Target needs at least two points.")
    logger.debug(f"richness_search(): target {target.size} point(s), eps={query.epsilon}, budget={subset_budget}")

    subsets = combinations(d.labels, target.size)
    batch_size = 8 * resolve_threads(threads)
    scanned = 0
    best: tuple[Fraction, tuple[str, ...], tuple[str, ...], Fraction] | None = None
    exhausted = False
    while True:
        limit = batch_size if subset_budget is None else min(batch_size, subset_budget - scanned)
        batch = list(islice(subsets, max(limit, 0)))
        if not batch:
            exhausted = next(subsets, None) is None
            break
        results = ordered_map(lambda subset: _match_subset(d, subset, target, query.scale), batch, threads)
        for subset, (value, sigma, z) in zip(batch, results):
            scanned += 1
            if best is None or value < best[0]:
                best = (value, subset, sigma, z)
            if value < query.epsilon:
                logger.info(f"richness_search(): hit {sigma} with distortion {value} after {scanned} subset(s)")
                return RichnessResult(True, subset, sigma, z, value, False, scanned)

    assert best is not None
    logger.info(f"richness_search(): no hit in {scanned} subset(s); best distortion {best[0]}")
    return RichnessResult(False, best[1], best[2], best[3], best[0], exhausted, scanned)


# ===============================================================================
# CATALOG
# ===============================================================================

def find_isometry(d_a: FinMetric, d_f: FinMetric) -> tuple[str, ...] | None:
    """
    Label bijection carrying d_f isometrically onto d_a, or None.

    :return: sigma with d_a(sigma_i, sigma_j) = d_f(i, j).
    """
    if d_a.size != d_f.size or sorted(d_a.values()) != sorted(d_f.values()):
        return None
    n = d_f.size
    assignment: list[int] = []
    used = [False] * n

    def extend() -> bool:
        k = len(assignment)
        if k == n:
            return True
        for candidate in range(n):
            if used[candidate]:
                continue
            if all(d_a.dist[assignment[i]][candidate] == d_f.dist[i][k] for i in range(k)):
                used[candidate] = True
                assignment.append(candidate)
                if extend():
                    return True
                assignment.pop()
                used[candidate] = False
        return False

    return tuple(d_a.labels[i] for i in assignment) if extend() else None


def are_isometric(d_a: FinMetric, d_f: FinMetric) -> bool:
    """Exact isometry test (equality up to relabelling)."""
    return find_isometry(d_a, d_f) is not None


def _canonical_form(n: int, values: dict[tuple[int, int], Fraction]) -> tuple[Fraction, ...]:
    return min(
        tuple(values[tuple(sorted((p[i], p[j])))] for i, j in combinations(range(n), 2))  # type: ignore[index]
        for p in permutations(range(n))
    )


@lru_cache(maxsize=1)
def starter_catalog() -> tuple[FinMetric, ...]:
    """
    Every metric on 2 to 4 points with distances in {1, 3/2, 2}, one per isometry class.

    Ordered by size, then by canonical distance vector.
    """
    entries = (Fraction(1), Fraction(3, 2), Fraction(2))
    catalog: list[FinMetric] = []
    for n in range(2, 5):
        pairs = list(combinations(range(n), 2))
        seen: set[tuple[Fraction, ...]] = set()
        classes: list[tuple[tuple[Fraction, ...], FinMetric]] = []
        for assignment in product(entries, repeat=len(pairs)):
            values = dict(zip(pairs, assignment))
            form = _canonical_form(n, values)
            if form in seen:
                continue
            seen.add(form)
            rows = [[Fraction(0)] * n for _ in range(n)]
            for (i, j), value in zip(pairs, form):
                rows[i][j] = rows[j][i] = value
            labels = [f"f{i}" for i in range(n)]
            if not check_metric(labels, rows):
                classes.append((form, make_metric(labels, rows)))
        catalog.extend(metric for _, metric in sorted(classes, key=lambda item: item[0]))
    logger.debug(f"starter_catalog(): {len(catalog)} space(s)")
    return tuple(catalog)


# ===============================================================================
# RICHNESS PARAMETER
# ===============================================================================

class RichnessParameter(TransmissibleParameter):
    """
    Rich pseudo-cones as a transmissible parameter.

    Index q = (n, m): catalog space F_n and precision 2**-m. Tuples are
    labelled copies of F_n, the auxiliary value z is the exact best scale of the
    tuple, the value is the labelled distortion and the target is [2**-m, inf).
    A witness is therefore a subset that looks like F_n up to 2**-m after
    rescaling by z.
    """

    def __init__(self, catalog: Sequence[FinMetric] | None = None, scan_config: ScanConfig | None = None) -> None:
        super().__init__(scan_config)
        self._catalog = tuple(catalog) if catalog is not None else starter_catalog()

    @property
    def name(self) -> str:
        return "richness"

    @property
    def singular(self) -> bool:
        return True

    @property
    def catalog(self) -> tuple[FinMetric, ...]:
        return self._catalog

    def q_enum(self) -> Iterator[tuple[int, int]]:
        for total in count(0):
            for n in range(min(total + 1, len(self._catalog))):
                yield n, total - n + 1

    def arity(self, q: Any, limit: int) -> list[int]:
        size = self._catalog[q[0]].size
        return [size] if size <= limit else []

    def z_values(self, q: Any, a: tuple[str, ...], d: FinMetric) -> Sequence[Fraction]:
        z, _ = best_scale(restrict(d, a), self._relabelled_target(q, a))
        return (z,)

    def phi(self, q: Any, a: tuple[str, ...], z: Fraction, d: FinMetric) -> Fraction:
        target = self._catalog[q[0]]
        return max(
            abs(d(a[i], a[j]) / z - target.dist[i][j]) for i, j in combinations(range(target.size), 2)
        )

    def in_target(self, q: Any, value: Fraction) -> bool:
        return value >= Fraction(1, 2 ** q[1])

    def minimal_cardinality(self, q: Any) -> int:
        return self._catalog[q[0]].size

    def singular_space(self, q: Any, epsilon: Fraction, cardinality: int | None = None) -> FinMetric:
        """F_n rescaled to diameter epsilon; z = epsilon / diam(F_n) reproduces F_n exactly."""
        target = self._catalog[q[0]]
        return pad_space(scale(target, Fraction(epsilon) / diam(target)), cardinality)

    def parse_q(self, text: str) -> tuple[int, int]:
        values = parse_assignments(text)
        try:
            n = int(values.get("n", values.get("0", "0")))
            m = int(values.get("m", values.get("1", "1")))
        except ValueError as e:
            raise MetricError(ErrorCode.INVALID_INDEX, f"Richness index needs integers n, m, got {text!r}.") from e
        if not 0 <= n < len(self._catalog) or m < 0:
            raise MetricError(ErrorCode.INVALID_INDEX, f"Richness index out of range: {text!r}.",
                              catalog=len(self._catalog))
        return n, m

    def format_q(self, q: Any) -> Any:
        return {"n": q[0], "m": q[1]}

    def _relabelled_target(self, q: Any, a: tuple[str, ...]) -> FinMetric:
        target = self._catalog[q[0]]
        return FinMetric(tuple(a), target.dist)


# ===============================================================================
# SINGULAR WITNESSES AND BLOCK SPACES
# ===============================================================================

def singular_witness(param: TransmissibleParameter, q: Any, epsilon: Any,
                     cardinality: int | None = None) -> SingularWitness:
    """
    Violating space of diameter <= epsilon for index q, re-checked by a witness scan.

    :param cardinality: Requested number of points (at least the minimal cardinality).
    :raises MetricError: NotSingular, NonpositiveParameter.
    """
    eps = positive_parameter(epsilon, "epsilon")
    if not param.singular:
        raise MetricError(ErrorCode.NOT_SINGULAR, f"Parameter {param.name!r} is not singular.", param=param.name)
    space = param.singular_space(q, eps, cardinality)
    witness = anti_witness(param, space, q)
    if witness is None or diam(space) > eps:
        raise MetricError(ErrorCode.NOT_SINGULAR, f"Generated space does not violate {param.name} at q={q}.",
                          param=param.name)
    logger.debug(f"singular_witness(): {param.name} q={q} eps={eps} -> {space.size} point(s)")
    return SingularWitness(param.name, q, witness.z, space, witness.tuple_labels, eps)


def block_label(block: int, label: str) -> str:
    """Label of a point of block i in the assembled block space."""
    return f"b{block}:{label}"


def block_space(param: TransmissibleParameter, epsilon: Any, blocks: int) -> BlockSpace:
    """
    Hub plus N singular blocks; block i is a witness space of diameter <= epsilon * 2**-i
    for the i-th enumerated index (finite index sets are cycled).

    Distances: inside a block its own metric; hub to block i: epsilon * 2**-i;
    blocks i != j: epsilon * max(2**-i, 2**-j).

    :raises MetricError: NotSingular, NonpositiveParameter.
    """
    eps = positive_parameter(epsilon, "epsilon")
    if blocks < 1:
        raise MetricError(ErrorCode.NONPOSITIVE_PARAMETER, "At least one block is required.", blocks=blocks)
    if not param.singular:
        raise MetricError(ErrorCode.NOT_SINGULAR, f"Parameter {param.name!r} is not singular.", param=param.name)

    witnesses: list[SingularWitness] = []
    parts: list[FinMetric] = []
    for i, q in enumerate(islice(cycle(param.q_enum()), blocks), start=1):
        witness = singular_witness(param, q, eps / 2 ** i)
        witnesses.append(witness)
        parts.append(relabel(witness.space, {label: block_label(i, label) for label in witness.space.labels}))

    labels = [HUB] + [label for part in parts for label in part.labels]
    owner = {HUB: 0}
    for i, part in enumerate(parts, start=1):
        owner.update({label: i for label in part.labels})

    def distance(x: str, y: str) -> Fraction:
        if x == y:
            return Fraction(0)
        i, j = owner[x], owner[y]
        if i == 0 or j == 0:
            return eps / 2 ** max(i, j)
        if i == j:
            return parts[i - 1](x, y)
        return eps * max(Fraction(1, 2 ** i), Fraction(1, 2 ** j))

    metric = revalidate(make_metric(labels, [[distance(x, y) for y in labels] for x in labels]))
    block_witnesses = []
    for i, witness in enumerate(witnesses, start=1):
        tuple_labels = tuple(block_label(i, label) for label in witness.tuple_labels)
        value = param.phi(witness.q, tuple_labels, witness.z, metric)
        block_witnesses.append(Witness(param.name, witness.q, witness.z, tuple_labels, value))
    logger.info(f"block_space(): {blocks} block(s), {metric.size} point(s), eps={eps}")
    return BlockSpace(tuple(parts), HUB, metric, eps, tuple(block_witnesses))


# ===============================================================================
# PERTURBATION
# ===============================================================================

def find_cluster(d: FinMetric, size: int, bound: Any) -> tuple[str, ...] | None:
    """
    Lexicographically first subset of the given size with every distance below bound.
    """
    limit = positive_parameter(bound, "bound")
    n = d.size
    chosen: list[int] = []

    def extend(start: int) -> bool:
        if len(chosen) == size:
            return True
        for candidate in range(start, n - (size - len(chosen)) + 1):
            if all(d.dist[i][candidate] < limit for i in chosen):
                chosen.append(candidate)
                if extend(candidate + 1):
                    return True
                chosen.pop()
        return False

    if size < 1 or size > n or not extend(0):
        return None
    return tuple(d.labels[i] for i in chosen)


def perturb_to_anti(d: FinMetric, epsilon: Any, param: TransmissibleParameter, q: Any = None,
                    threads: int | None = 1) -> PerturbationResult:
    """
    Metric m with sup_dist(m, d) < epsilon carrying a witness for index q.

    Picks the first cluster S with diam(S) < epsilon / 2 and |S| equal to the
    minimal violating cardinality, transplants a singular witness space of
    diameter <= epsilon / 2 onto S and interpolates it into d.

    :param q: Index (default: the first enumerated one).
    :raises MetricError: NoSmallCluster, NotSingular.
    """
    eps = positive_parameter(epsilon, "epsilon")
    if not param.singular:
        raise MetricError(ErrorCode.NOT_SINGULAR, f"Parameter {param.name!r} is not singular.", param=param.name)
    index = q if q is not None else next(iter(param.q_enum()))
    size = param.minimal_cardinality(index)
    cluster = find_cluster(d, size, eps / 2)
    if cluster is None:
        logger.error(f"perturb_to_anti(): no {size}-point cluster below {eps / 2}")
        raise MetricError(ErrorCode.NO_SMALL_CLUSTER, f"No {size}-point subset of diameter < {eps / 2}.",
                          size=size, bound=format_scalar(eps / 2))

    witness_space = singular_witness(param, index, eps / 2, cardinality=len(cluster)).space
    transplanted = relabel(witness_space, dict(zip(witness_space.labels, cluster)))
    result = interpolate_single(d, cluster, transplanted, threads=threads)
    witness = anti_witness(param, restrict(result.m, cluster), index)
    if witness is None:
        raise MetricError(ErrorCode.NOT_SINGULAR, "Interpolated cluster lost its witness.", param=param.name)
    eta = sup_dist(result.m, d)
    logger.info(f"perturb_to_anti(): {param.name} witness on {cluster}, sup_dist {eta} < {eps}")
    return PerturbationResult(result.m, witness, cluster, eta)
