"""
Transmissible parameters, anti-property witnesses and property verdicts.

A transmissible parameter is a family of tests indexed by q. For each q it
fixes the admissible tuple sizes G(q), auxiliary values z, an evaluator
phi(q, a, z, d) that only looks at d on the points of a, and a target set
F(q). A space satisfies the property if some q keeps every phi value inside
F(q); it satisfies the anti-property if every q is broken by some tuple (a
Witness).

This module holds the framework plus the doubling and uniform
disconnectedness instances; metric inequalities live in inequalities.py.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import chain, combinations, count, groupby, islice, permutations
from math import ceil, floor
from typing import Any, Callable, Iterable, Iterator, Sequence, TypeVar

from loguru import logger

from metric_amalgam.amalgam_logic.config import ScanConfig, VerdictKind
from metric_amalgam.amalgam_logic.core import (
    FinMetric,
    diam,
    equilateral,
    line_metric,
    make_metric,
    min_sep,
)
from metric_amalgam.amalgam_logic.errors import ErrorCode, MetricError
from metric_amalgam.utils.parallel import ordered_map
from metric_amalgam.utils.scalar import format_scalar, parse_scalar, power_gap, power_leq, to_jsonable

T = TypeVar("T")


# ===============================================================================
# RESULT TYPES
# ===============================================================================

@dataclass(frozen=True)
class Witness:
    """
    Certificate that parameter index q fails: phi(q, a, z, d) lies outside F(q).
    """
    param: str
    q: Any
    z: Fraction
    tuple_labels: tuple[str, ...]
    value: Any

    def to_dict(self) -> dict[str, Any]:
        return {
            "param": self.param,
            "q": to_jsonable(self.q),
            "z": format_scalar(self.z),
            "tuple": list(self.tuple_labels),
            "value": to_jsonable(self.value),
        }


@dataclass(frozen=True)
class DefectReport:
    """
    Extremal violation of a property over a tuple scan; positive means violated.

    :ivar exhaustive: Whether every admissible tuple was scanned.
    :ivar exact: False only for quantities computed by the floating point cycle solver.
    """
    property_name: str
    defect: Fraction | float
    witness: tuple[str, ...] | None
    exhaustive: bool
    exact: bool = True
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def violated(self) -> bool:
        return self.defect > 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "property": self.property_name,
            "defect": to_jsonable(self.defect),
            "witness": list(self.witness) if self.witness is not None else None,
            "exhaustive": self.exhaustive,
            "exact": self.exact,
            "details": to_jsonable(self.details),
        }


@dataclass(frozen=True)
class ModulusReport:
    """
    Uniform disconnectedness modulus with a chain attaining it.
    """
    modulus: Fraction
    chain: tuple[str, ...]
    exhaustive: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "modulus": format_scalar(self.modulus),
            "chain": list(self.chain),
            "exhaustive": self.exhaustive,
        }


@dataclass(frozen=True)
class Verdict:
    """
    Budgeted decision of the property / anti-property question.

    :ivar q: The index certifying the property (SATISFIED only).
    :ivar witnesses: One witness per enumerated index (ANTI_SATISFIED).
    :ivar exact: True when the verdict does not depend on the budget.
    """
    kind: VerdictKind
    param: str
    q: Any | None
    witnesses: tuple[Witness, ...]
    budget: int
    exact: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "verdict": self.kind.value,
            "param": self.param,
            "q": to_jsonable(self.q),
            "witnesses": [witness.to_dict() for witness in self.witnesses],
            "budget": self.budget,
            "exact": self.exact,
        }


# ===============================================================================
# BASE PARAMETER
# ===============================================================================

class TransmissibleParameter(ABC):
    """
    Base class of every transmissible parameter.

    Subclasses provide the index enumeration, admissible tuple sizes, the
    evaluator and the target test; singular parameters also generate violating
    spaces of any small diameter.
    """

    def __init__(self, scan_config: ScanConfig | None = None) -> None:
        """
        Initialize the parameter.

        :param scan_config: Limits applied when scanning tuples.
        """
        self._scan_config = scan_config or ScanConfig()

    # ==================== Properties ====================

    @property
    @abstractmethod
    def name(self) -> str:
        """Registry name of the parameter."""

    @property
    def singular(self) -> bool:
        """Whether violating spaces of arbitrarily small diameter exist."""
        return False

    @property
    def finite_q(self) -> bool:
        """Whether q_enum terminates, making anti-property verdicts exact."""
        return False

    @property
    def scan_config(self) -> ScanConfig:
        return self._scan_config

    # ==================== Abstract Methods ====================

    @abstractmethod
    def q_enum(self) -> Iterator[Any]:
        """Enumerate parameter indices in a fixed order."""

    @abstractmethod
    def arity(self, q: Any, limit: int) -> list[int]:
        """
        Admissible tuple sizes up to a limit, ascending.

        :param q: Parameter index.
        :param limit: Largest size of interest (the number of points).
        """

    @abstractmethod
    def phi(self, q: Any, a: tuple[str, ...], z: Fraction, d: FinMetric) -> Any:
        """Evaluate the parameter on a tuple; must only read d on the points of a."""

    @abstractmethod
    def in_target(self, q: Any, value: Any) -> bool:
        """Membership of a phi value in the target set F(q)."""

    @abstractmethod
    def parse_q(self, text: str) -> Any:
        """
        Parse a parameter index from command line text.

        :raises MetricError: InvalidIndex or NonpositiveParameter.
        """

    # ==================== Hooks ====================

    def size_cap(self) -> int | None:
        """Largest tuple size scanned under the current configuration (None: no cap)."""
        return None

    def tuples(self, labels: Sequence[str], size: int) -> Iterable[tuple[str, ...]]:
        """Injective tuples of a given size, in lexicographic order of positions."""
        return permutations(labels, size)

    def z_values(self, q: Any, a: tuple[str, ...], d: FinMetric) -> Sequence[Fraction]:
        """Auxiliary values tried for a tuple; a single z = 1 by default."""
        return (Fraction(1),)

    def minimal_cardinality(self, q: Any) -> int:
        """Fewest points of a violating space for index q."""
        raise self._not_singular()

    def singular_space(self, q: Any, epsilon: Fraction, cardinality: int | None = None) -> FinMetric:
        """
        Violating space for index q with diameter at most epsilon.

        :raises MetricError: NotSingular for non-singular parameters.
        """
        raise self._not_singular()

    def format_q(self, q: Any) -> Any:
        return to_jsonable(q)

    def describe(self) -> dict[str, Any]:
        return {"name": self.name, "singular": self.singular, "finite_q": self.finite_q}

    def _not_singular(self) -> MetricError:
        return MetricError(ErrorCode.NOT_SINGULAR, f"Parameter {self.name!r} is not singular.", param=self.name)


# ===============================================================================
# SCANS
# ===============================================================================

def max_scan(evaluate: Callable[[T], Any], candidates: Iterable[T], threads: int | None = 1,
             key: Callable[[T], Any] | None = None, chunk_size: int = 64) -> tuple[Any, T] | None:
    """
    Maximise evaluate over candidates, returning (value, candidate).

    Candidates are grouped by key (default: first element) and pulled lazily,
    chunk_size groups at a time, onto the ordered thread map; only strict
    improvements replace the incumbent, so the earliest maximiser wins
    regardless of the thread count.
    """
    group_key = key or (lambda item: item[0])  # type: ignore[index]
    groups = (list(group) for _, group in groupby(candidates, key=group_key))

    def best_of(group: list[T]) -> tuple[Any, T] | None:
        best: tuple[Any, T] | None = None
        for candidate in group:
            value = evaluate(candidate)
            if best is None or value > best[0]:
                best = (value, candidate)
        return best

    best: tuple[Any, T] | None = None
    while chunk := list(islice(groups, chunk_size)):
        for result in ordered_map(best_of, chunk, threads):
            if result is not None and (best is None or result[0] > best[0]):
                best = result
    return best


def scan_for_witness(param: TransmissibleParameter, d: FinMetric, q: Any) -> tuple[Witness | None, bool]:
    """
    First witness for index q, scanning sizes in descending order.

    :return: (witness or None, whether the admissible tuple space was fully scanned).
    :raises MetricError: ArityExceedsSpace when no admissible size fits into d.
    """
    sizes = param.arity(q, d.size)
    if not sizes:
        raise MetricError(
            ErrorCode.ARITY_EXCEEDS_SPACE,
            f"No admissible tuple size for {param.name} fits into {d.size} point(s).",
            param=param.name,
            points=d.size,
        )
    cap = param.size_cap()
    scanned = [size for size in sizes if cap is None or size <= cap]
    exhaustive = len(scanned) == len(sizes)
    for size in reversed(scanned):
        for a in param.tuples(d.labels, size):
            for z in param.z_values(q, a, d):
                value = param.phi(q, a, z, d)
                if not param.in_target(q, value):
                    return Witness(param.name, q, z, tuple(a), value), exhaustive
    return None, exhaustive


def anti_witness(param: TransmissibleParameter, d: FinMetric, q: Any) -> Witness | None:
    """
    Search a certificate that index q fails on d.

    :param param: Transmissible parameter.
    :param d: Metric space.
    :param q: Index produced by param.q_enum().
    :return: The first witness in scan order, or None.
    :raises MetricError: ArityExceedsSpace.
    """
    logger.debug(f"anti_witness(): {param.name} q={q} on {d.size} point(s)")
    witness, _ = scan_for_witness(param, d, q)
    if witness is not None:
        logger.debug(f"anti_witness(): found {witness.tuple_labels}")
    return witness


def satisfies_property(param: TransmissibleParameter, d: FinMetric, q_budget: int | None = None) -> Verdict:
    """
    Decide the property over the first q_budget indices.

    SATISFIED(q) as soon as an index has no witness after a complete scan (also
    when no admissible tuple fits, vacuously). ANTI_SATISFIED when every
    enumerated index has a witness; exact if the index set was exhausted.
    UNKNOWN when some scan was capped and found nothing.

    :param q_budget: Number of indices to try; defaults to the parameter's ScanConfig.
    :raises MetricError: NonpositiveParameter if q_budget < 1.
    """
    budget = q_budget if q_budget is not None else param.scan_config.q_budget
    if budget < 1:
        logger.error(f"satisfies_property(): q_budget must be at least 1, got {budget}")
        raise MetricError(ErrorCode.NONPOSITIVE_PARAMETER, "q_budget must be at least 1.", q_budget=budget)
    indices = list(islice(param.q_enum(), budget + 1))
    exhausted_q = len(indices) <= budget
    witnesses: list[Witness] = []
    inconclusive = False
    for q in indices[:budget]:
        try:
            witness, exhaustive = scan_for_witness(param, d, q)
        except MetricError as e:
            if e.code is not ErrorCode.ARITY_EXCEEDS_SPACE:
                raise
            logger.info(f"satisfies_property(): {param.name} holds vacuously at q={q}")
            return Verdict(VerdictKind.SATISFIED, param.name, q, (), budget, True)
        if witness is not None:
            witnesses.append(witness)
        elif exhaustive:
            logger.info(f"satisfies_property(): {param.name} holds at q={q}")
            return Verdict(VerdictKind.SATISFIED, param.name, q, (), budget, True)
        else:
            inconclusive = True

    if inconclusive:
        return Verdict(VerdictKind.UNKNOWN, param.name, None, tuple(witnesses), budget, False)
    exact = param.finite_q and exhausted_q
    logger.info(f"satisfies_property(): anti-{param.name} over {len(witnesses)} index(es), exact={exact}")
    return Verdict(VerdictKind.ANTI_SATISFIED, param.name, None, tuple(witnesses), budget, exact)


# ===============================================================================
# HELPERS
# ===============================================================================

def parse_assignments(text: str) -> dict[str, str]:
    """
    Parse "key=value,key=value" into a dict; bare values are returned under
    positional keys "0", "1", ...
    """
    result: dict[str, str] = {}
    for position, item in enumerate(part.strip() for part in text.split(",") if part.strip()):
        key, sep, value = item.partition("=")
        if sep:
            result[key.strip()] = value.strip()
        else:
            result[str(position)] = key
    return result


def positive_parameter(value: Any, name: str) -> Fraction:
    """
    Parse a strictly positive parameter.

    :raises MetricError: NonpositiveParameter.
    """
    parsed = parse_scalar(value)
    if parsed <= 0:
        raise MetricError(ErrorCode.NONPOSITIVE_PARAMETER, f"{name} must be positive, got {parsed}.",
                          name=name, value=format_scalar(parsed))
    return parsed


def pad_space(space: FinMetric, cardinality: int | None) -> FinMetric:
    """
    Grow a space to the requested cardinality by duplicating its last point at
    half the current minimum separation. Distances to other points are copied,
    so the diameter is unchanged.

    :raises MetricError: SubsetTooSmall if fewer points than the space has are requested.
    """
    if cardinality is None or cardinality == space.size:
        return space
    if cardinality < space.size:
        raise MetricError(ErrorCode.SUBSET_TOO_SMALL, f"Space needs at least {space.size} points.",
                          requested=cardinality, minimum=space.size)
    labels = list(space.labels)
    rows = [list(row) for row in space.dist]
    while len(labels) < cardinality:
        n = len(labels)
        source = n - 1
        separation = min(rows[i][j] for i, j in combinations(range(n), 2))
        column = list(rows[source])
        column[source] = separation / 2
        for i in range(n):
            rows[i].append(column[i])
        rows.append(column + [Fraction(0)])
        label = f"{labels[source]}'"
        while label in labels:
            label += "'"
        labels.append(label)
    return make_metric(labels, rows)


def _ordered_by_position(labels: Sequence[str], size: int,
                         keep: Callable[[tuple[int, ...]], bool]) -> Iterator[tuple[str, ...]]:
    for indices in permutations(range(len(labels)), size):
        if keep(indices):
            yield tuple(labels[i] for i in indices)


def endpoint_ordered_tuples(labels: Sequence[str], size: int) -> Iterator[tuple[str, ...]]:
    """Injective tuples up to reversal (first position before last)."""
    return _ordered_by_position(labels, size, lambda a: a[0] < a[-1])


def dihedral_tuples(labels: Sequence[str], size: int) -> Iterator[tuple[str, ...]]:
    """Injective tuples up to rotation and reversal of the cyclic order."""
    return _ordered_by_position(labels, size, lambda a: a[0] == min(a) and a[1] < a[-1])


# ===============================================================================
# DOUBLING
# ===============================================================================

class DoublingParameter(TransmissibleParameter):
    """
    Doubling: card(A) <= C * (diam(A) / min_sep(A)) ** alpha for every finite A.

    Indices are pairs (C, alpha) of positive integers enumerated along
    diagonals; the value of a subset is (card, diam / min_sep).
    """

    @property
    def name(self) -> str:
        return "doubling"

    @property
    def singular(self) -> bool:
        return True

    def q_enum(self) -> Iterator[tuple[Fraction, Fraction]]:
        for total in count(2):
            for c in range(1, total):
                yield Fraction(c), Fraction(total - c)

    def arity(self, q: Any, limit: int) -> list[int]:
        return list(range(2, limit + 1))

    def size_cap(self) -> int | None:
        return None if self._scan_config.exhaustive else self._scan_config.max_subset

    def tuples(self, labels: Sequence[str], size: int) -> Iterable[tuple[str, ...]]:
        return combinations(labels, size)

    def phi(self, q: Any, a: tuple[str, ...], z: Fraction, d: FinMetric) -> tuple[int, Fraction]:
        return len(a), diam(d, a) / min_sep(d, a)

    def in_target(self, q: Any, value: tuple[int, Fraction]) -> bool:
        coefficient, alpha = q
        card, ratio = value
        return power_leq(card, coefficient, ratio, alpha)

    def minimal_cardinality(self, q: Any) -> int:
        return floor(q[0]) + 1

    def singular_space(self, q: Any, epsilon: Fraction, cardinality: int | None = None) -> FinMetric:
        """Equilateral space at distance epsilon; ceil(C) + 2 points unless a cardinality is requested."""
        size = cardinality if cardinality is not None else ceil(q[0]) + 2
        if size < self.minimal_cardinality(q):
            raise MetricError(ErrorCode.SUBSET_TOO_SMALL, f"Doubling at C={q[0]} needs more than {q[0]} points.",
                              requested=size, minimum=self.minimal_cardinality(q))
        return equilateral(size, epsilon)

    def parse_q(self, text: str) -> tuple[Fraction, Fraction]:
        values = parse_assignments(text)
        coefficient = values.get("C", values.get("0"))
        alpha = values.get("alpha", values.get("1"))
        if coefficient is None or alpha is None:
            raise MetricError(ErrorCode.INVALID_INDEX, f"Doubling index needs C and alpha, got {text!r}.")
        return positive_parameter(coefficient, "C"), positive_parameter(alpha, "alpha")

    def format_q(self, q: Any) -> Any:
        return {"C": format_scalar(q[0]), "alpha": format_scalar(q[1])}


def doubling_check(d: FinMetric, coefficient: Any, alpha: Any, max_subset: int | None = None,
                   threads: int | None = 1) -> DefectReport:
    """
    Largest doubling violation over subsets of size 2..max_subset.

    For alpha = p/q the defect is card**q - C**q * ratio**p (ratio = diam / min_sep),
    computed exactly; it equals card - C * ratio**alpha for integer alpha and
    has the same sign otherwise.

    :param d: Metric space.
    :param coefficient: C > 0.
    :param alpha: Exponent alpha > 0, rational.
    :param max_subset: Largest subset size scanned (None: all).
    :param threads: Workers; subsets sharing a first label form one work item.
    :raises MetricError: NonpositiveParameter.
    """
    c = positive_parameter(coefficient, "C")
    a = positive_parameter(alpha, "alpha")
    if max_subset is not None and max_subset < 2:
        raise MetricError(ErrorCode.NONPOSITIVE_PARAMETER, "max_subset must be at least 2.", max_subset=max_subset)
    limit = d.size if max_subset is None else min(max_subset, d.size)
    logger.debug(f"doubling_check(): C={c}, alpha={a}, subsets up to {limit} of {d.size}")
    details: dict[str, Any] = {"C": c, "alpha": a, "form": "card^q - C^q * ratio^p for alpha = p/q"}

    def gap(subset: tuple[str, ...]) -> Fraction:
        return power_gap(len(subset), c, diam(d, subset) / min_sep(d, subset), a)

    candidates = chain.from_iterable(combinations(d.labels, size) for size in range(2, limit + 1))
    best = max_scan(gap, candidates, threads)
    if best is None:
        return DefectReport("doubling", Fraction(0), None, True, details=details)
    defect, witness = best
    details.update(card=len(witness), ratio=diam(d, witness) / min_sep(d, witness))
    logger.info(f"doubling_check(): defect {defect} at {len(witness)} point(s)")
    return DefectReport("doubling", defect, tuple(witness), limit >= d.size, details=details)


# ===============================================================================
# UNIFORM DISCONNECTEDNESS
# ===============================================================================

class UniformDisconnectednessParameter(TransmissibleParameter):
    """
    Uniform delta-disconnectedness: no injective chain has every consecutive
    gap below delta times the distance of its endpoints.

    Indices are delta = 1/k for k >= 2; the value of a chain is
    (largest gap, endpoint distance).
    """

    @property
    def name(self) -> str:
        return "ud"

    @property
    def singular(self) -> bool:
        return True

    def q_enum(self) -> Iterator[Fraction]:
        for k in count(2):
            yield Fraction(1, k)

    def arity(self, q: Any, limit: int) -> list[int]:
        return list(range(2, limit + 1))

    def size_cap(self) -> int | None:
        return None if self._scan_config.exhaustive else self._scan_config.max_chain

    def tuples(self, labels: Sequence[str], size: int) -> Iterable[tuple[str, ...]]:
        return endpoint_ordered_tuples(labels, size)

    def phi(self, q: Any, a: tuple[str, ...], z: Fraction, d: FinMetric) -> tuple[Fraction, Fraction]:
        return max(d(x, y) for x, y in zip(a, a[1:])), d(a[0], a[-1])

    def in_target(self, q: Any, value: tuple[Fraction, Fraction]) -> bool:
        gap, end = value
        return gap >= q * end

    def minimal_cardinality(self, q: Any) -> int:
        return floor(1 / q) + 2

    def singular_space(self, q: Any, epsilon: Fraction, cardinality: int | None = None) -> FinMetric:
        """Arithmetic chain {epsilon * i / n} with 1/n < delta."""
        steps = floor(1 / q) + 1
        if cardinality is not None:
            if cardinality < steps + 1:
                raise MetricError(ErrorCode.SUBSET_TOO_SMALL, f"A chain for delta={q} needs {steps + 1} points.",
                                  requested=cardinality, minimum=steps + 1)
            steps = cardinality - 1
        return line_metric([Fraction(epsilon) * i / steps for i in range(steps + 1)])

    def parse_q(self, text: str) -> Fraction:
        values = parse_assignments(text)
        delta = values.get("delta", values.get("0"))
        if delta is None:
            raise MetricError(ErrorCode.INVALID_INDEX, f"UD index needs delta, got {text!r}.")
        return positive_parameter(delta, "delta")


def ud_modulus(d: FinMetric, max_chain: int | None = None) -> ModulusReport:
    """
    Smallest ratio max_i d(z_i, z_{i+1}) / d(z_1, z_N) over injective chains
    with 2 <= N <= max_chain points.

    Computed per start point by a bottleneck-path recursion on the number of
    points: a walk can always be shortcut to an injective chain with no larger
    gap, and strict improvements never revisit a point.

    :raises MetricError: SpaceTooSmall, NonpositiveParameter.
    """
    if d.size < 2:
        raise MetricError(ErrorCode.SPACE_TOO_SMALL, "The modulus needs at least two points.", points=d.size)
    if max_chain is not None and max_chain < 2:
        raise MetricError(ErrorCode.NONPOSITIVE_PARAMETER, "max_chain must be at least 2.", max_chain=max_chain)
    length = d.size if max_chain is None else min(max_chain, d.size)
    logger.debug(f"ud_modulus(): chains up to {length} point(s) on {d.size}")

    best: tuple[Fraction, tuple[str, ...]] | None = None
    for position, start in enumerate(d.labels):
        gaps = {label: d(start, label) for label in d.labels}
        paths = {label: (start, label) for label in d.labels}
        paths[start] = (start,)
        for _ in range(length - 2):
            new_gaps, new_paths = dict(gaps), dict(paths)
            for target in d.labels:
                if target == start:
                    continue
                for via in d.labels:
                    if via == target:
                        continue
                    candidate = max(gaps[via], d(via, target))
                    if candidate < new_gaps[target]:
                        new_gaps[target] = candidate
                        new_paths[target] = paths[via] + (target,)
            gaps, paths = new_gaps, new_paths
        for end in d.labels[position + 1:]:
            ratio = gaps[end] / d(start, end)
            if best is None or ratio < best[0]:
                best = (ratio, paths[end])

    assert best is not None
    logger.info(f"ud_modulus(): modulus {best[0]}")
    return ModulusReport(modulus=best[0], chain=best[1], exhaustive=length >= d.size)
