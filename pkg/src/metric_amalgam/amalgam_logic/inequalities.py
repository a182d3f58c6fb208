"""
(n, f)-metric inequalities.

An inequality descriptor is a function f of the C(n, 2) distances x_i_j of an
n-tuple; a space satisfies the inequality when f >= 0 on every injective
n-tuple. Defects report max(-f) so that a positive number means violated.

Registered descriptors: ultrametric, Ptolemy, hyperbolicity at delta, the
planar cycle condition and user expressions.
"""

import ast
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, count, permutations
from typing import Any, Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np
from loguru import logger

from metric_amalgam.amalgam_logic.config import Cycl0Config, ScanConfig
from metric_amalgam.amalgam_logic.core import (
    FinMetric,
    cycle_graph_metric,
    diam,
    line_metric,
    scale,
)
from metric_amalgam.amalgam_logic.cycle_condition import accepts_slack, best_min_slack
from metric_amalgam.amalgam_logic.errors import ErrorCode, MetricError
from metric_amalgam.amalgam_logic.transmissible import (
    DefectReport,
    TransmissibleParameter,
    dihedral_tuples,
    endpoint_ordered_tuples,
    max_scan,
    pad_space,
    parse_assignments,
)
from metric_amalgam.utils.scalar import format_scalar, parse_scalar, to_jsonable

Distances = Mapping[tuple[int, int], Any]


# ===============================================================================
# DESCRIPTORS
# ===============================================================================

class InequalityDescriptor(ABC):
    """
    Function f of the pairwise distances of an n-tuple.

    Variables are keyed by 1-based index pairs (i, j) with i < j.
    """
    key: str = "inequality"
    exact: bool = True

    def __init__(self, n: int, degree: int = 1) -> None:
        """
        :param n: Arity of the tuples.
        :param degree: Declared sub-homogeneity degree c: f(r x) <= r**c f(x).
        """
        self.n = n
        self.degree = degree

    @abstractmethod
    def evaluate(self, x: Distances) -> Any:
        """Value of f on a distance assignment."""

    def value(self, d: FinMetric, a: Sequence[str]) -> Any:
        """Value of f on the distances of the tuple a."""
        return self.evaluate({(i + 1, j + 1): d(a[i], a[j]) for i, j in combinations(range(self.n), 2)})

    def tuples(self, labels: Sequence[str]) -> Iterable[tuple[str, ...]]:
        """Tuples scanned by defect computations; subclasses drop symmetric duplicates."""
        return permutations(labels, self.n)

    def holds(self, value: Any) -> bool:
        return value >= 0

    def violator(self) -> FinMetric | None:
        """Stored n-point space violating the inequality, if f is sub-homogeneous."""
        return None

    @property
    def singular(self) -> bool:
        return self.violator() is not None

    def describe(self) -> dict[str, Any]:
        return {"descriptor": self.key, "n": self.n, "degree": self.degree, "exact": self.exact}


class UltrametricDescriptor(InequalityDescriptor):
    """f = max(x_1_2, x_2_3) - x_1_3."""
    key = "ultrametric"

    def __init__(self) -> None:
        super().__init__(n=3, degree=1)

    def evaluate(self, x: Distances) -> Fraction:
        return max(x[1, 2], x[2, 3]) - x[1, 3]

    def tuples(self, labels: Sequence[str]) -> Iterable[tuple[str, ...]]:
        return endpoint_ordered_tuples(labels, 3)

    def violator(self) -> FinMetric:
        return line_metric([0, 1, 2])


class PtolemyDescriptor(InequalityDescriptor):
    """f = x_2_3 * x_1_4 + x_1_2 * x_3_4 - x_1_3 * x_2_4."""
    key = "ptolemy"

    def __init__(self) -> None:
        super().__init__(n=4, degree=2)

    def evaluate(self, x: Distances) -> Fraction:
        return x[2, 3] * x[1, 4] + x[1, 2] * x[3, 4] - x[1, 3] * x[2, 4]

    def tuples(self, labels: Sequence[str]) -> Iterable[tuple[str, ...]]:
        return dihedral_tuples(labels, 4)

    def violator(self) -> FinMetric:
        return cycle_graph_metric(4)


class HyperbolicityDescriptor(InequalityDescriptor):
    """
    Four point condition at delta:
    f = max(x_1_2 + x_3_4, x_1_4 + x_2_3) + 2 delta - x_1_3 - x_2_4.

    Sub-homogeneous only for delta = 0.
    """
    key = "hyperbolicity"

    def __init__(self, delta: Any = 0) -> None:
        super().__init__(n=4, degree=1)
        self.delta = parse_scalar(delta)
        if self.delta < 0:
            raise MetricError(ErrorCode.NONPOSITIVE_PARAMETER, "delta must be nonnegative.",
                              delta=format_scalar(self.delta))

    def evaluate(self, x: Distances) -> Fraction:
        return max(x[1, 2] + x[3, 4], x[1, 4] + x[2, 3]) + 2 * self.delta - x[1, 3] - x[2, 4]

    def tuples(self, labels: Sequence[str]) -> Iterable[tuple[str, ...]]:
        return dihedral_tuples(labels, 4)

    def violator(self) -> FinMetric | None:
        return cycle_graph_metric(4) if self.delta == 0 else None

    def describe(self) -> dict[str, Any]:
        return {**super().describe(), "delta": format_scalar(self.delta)}


class Cycl0Descriptor(InequalityDescriptor):
    """
    Planar cycle condition on m-tuples: f is the best min slack found by the
    cycle solver. Negative slacks within tol times the tuple diameter count as 0.
    """
    key = "cycl0"
    exact = False

    def __init__(self, m: int, config: Cycl0Config | None = None) -> None:
        if m < 3:
            raise MetricError(ErrorCode.ARITY_TOO_SMALL, "A cycle needs at least three points.", m=m)
        super().__init__(n=m, degree=1)
        self.config = config or Cycl0Config()

    def evaluate(self, x: Distances) -> float:
        matrix = np.zeros((self.n, self.n))
        for (i, j), value in x.items():
            matrix[i - 1, j - 1] = matrix[j - 1, i - 1] = float(value)
        slack, _ = best_min_slack(matrix, self.config)
        if slack < 0 and accepts_slack(slack, matrix, self.config.tol):
            return 0.0
        return slack

    def tuples(self, labels: Sequence[str]) -> Iterable[tuple[str, ...]]:
        return dihedral_tuples(labels, self.n)

    def violator(self) -> FinMetric | None:
        # (i, i+2) pairs force equal collinear steps that cannot close up
        return cycle_graph_metric(self.n) if self.n >= 4 else None


class ExpressionDescriptor(InequalityDescriptor):
    """
    User expression over x_i_j (or xij when n < 10).

    Supported: + - *, unary minus, numeric constants, division by constants,
    min(...) and max(...). Evaluated exactly on Fractions.

    Example:
        ExpressionDescriptor("max(x_1_2, x_2_3) - x_1_3", n=3)
    """
    key = "inequality"

    def __init__(self, expression: str, n: int, degree: int = 1) -> None:
        if n < 2:
            raise MetricError(ErrorCode.ARITY_TOO_SMALL, "An inequality needs at least two points.", n=n)
        super().__init__(n=n, degree=degree)
        self.expression = expression
        self._compiled = _compile_expression(expression, n)

    def evaluate(self, x: Distances) -> Fraction:
        return self._compiled(x)

    def describe(self) -> dict[str, Any]:
        return {**super().describe(), "expression": self.expression}


def _expression_error(message: str, expression: str) -> MetricError:
    return MetricError(ErrorCode.INVALID_EXPRESSION, message, expression=expression)


def _variable(name: str, n: int, expression: str) -> tuple[int, int]:
    body = name[1:]
    if body.startswith("_"):
        parts = body[1:].split("_")
    elif n < 10 and len(body) == 2:
        parts = [body[0], body[1]]
    else:
        raise _expression_error(f"Unknown name {name!r}.", expression)
    if len(parts) != 2 or not all(part.isdigit() for part in parts):
        raise _expression_error(f"Malformed variable {name!r}.", expression)
    i, j = int(parts[0]), int(parts[1])
    if i == j or not (1 <= i <= n and 1 <= j <= n):
        raise _expression_error(f"Variable {name!r} is out of range for n={n}.", expression)
    return (i, j) if i < j else (j, i)


def _compile_expression(expression: str, n: int) -> Callable[[Distances], Fraction]:
    try:
        tree = ast.parse(expression, mode="eval")
    except SyntaxError as e:
        raise _expression_error(f"Cannot parse expression: {e.msg}", expression) from e

    def build(node: ast.AST) -> Callable[[Distances], Fraction]:
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            constant = parse_scalar(node.value)
            return lambda x: constant
        if isinstance(node, ast.Name):
            if not node.id.startswith("x"):
                raise _expression_error(f"Unknown name {node.id!r}.", expression)
            pair = _variable(node.id, n, expression)
            return lambda x: x[pair]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            operand = build(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda x: -operand(x)
            return operand
        if isinstance(node, ast.BinOp):
            left, right = build(node.left), build(node.right)
            if isinstance(node.op, ast.Add):
                return lambda x: left(x) + right(x)
            if isinstance(node.op, ast.Sub):
                return lambda x: left(x) - right(x)
            if isinstance(node.op, ast.Mult):
                return lambda x: left(x) * right(x)
            if isinstance(node.op, ast.Div):
                if not isinstance(node.right, ast.Constant):
                    raise _expression_error("Only division by constants is supported.", expression)
                divisor = parse_scalar(node.right.value)
                if divisor == 0:
                    raise _expression_error("Division by zero.", expression)
                return lambda x: left(x) / divisor
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in ("min", "max") \
                and node.args and not node.keywords:
            arguments = [build(argument) for argument in node.args]
            reduce = min if node.func.id == "min" else max
            return lambda x: reduce(argument(x) for argument in arguments)
        raise _expression_error(f"Unsupported syntax: {ast.dump(node)}", expression)

    return build(tree.body)


def make_descriptor(name: str, cycl0_config: Cycl0Config | None = None, **options: Any) -> InequalityDescriptor:
    """
    Build a descriptor by name.

    :param name: ultrametric, ptolemy, hyperbolicity (delta=...), cycl0 (m=...) or
        inequality (expr=..., arity=..., degree=...).
    :raises MetricError: UnknownDescriptor, InvalidExpression.
    """
    if name == "ultrametric":
        return UltrametricDescriptor()
    if name == "ptolemy":
        return PtolemyDescriptor()
    if name == "hyperbolicity":
        return HyperbolicityDescriptor(options.get("delta", 0))
    if name == "cycl0":
        return Cycl0Descriptor(int(options.get("m", 4)), cycl0_config)
    if name == "inequality":
        if not options.get("expr") or options.get("arity") is None:
            raise MetricError(ErrorCode.INVALID_EXPRESSION, "A user inequality needs an expression and an arity.")
        return ExpressionDescriptor(options["expr"], int(options["arity"]), int(options.get("degree", 1)))
    raise MetricError(ErrorCode.UNKNOWN_DESCRIPTOR, f"Unknown inequality descriptor: {name!r}", name=name)


# ===============================================================================
# DEFECTS
# ===============================================================================

def check_inequality(descriptor: InequalityDescriptor, d: FinMetric, threads: int | None = 1) -> DefectReport:
    """
    Largest violation max(-f) over the injective n-tuples of d.

    Spaces with fewer than n points satisfy the inequality vacuously
    (defect 0, no witness).

    :param descriptor: Registered or user descriptor.
    :param d: Metric space.
    :param threads: Workers; tuples sharing a first point form one work item.
    """
    logger.debug(f"check_inequality(): {descriptor.key} (n={descriptor.n}) on {d.size} point(s)")
    zero: Any = Fraction(0) if descriptor.exact else 0.0
    details = descriptor.describe()
    if d.size < descriptor.n:
        return DefectReport(descriptor.key, zero, None, True, descriptor.exact, details)
    best = max_scan(lambda a: -descriptor.value(d, a), descriptor.tuples(d.labels), threads)
    assert best is not None
    defect, witness = best
    logger.info(f"check_inequality(): {descriptor.key} defect {defect} at {witness}")
    return DefectReport(descriptor.key, defect, tuple(witness), True, descriptor.exact, details)


def ultrametric_defect(d: FinMetric, threads: int | None = 1) -> DefectReport:
    """
    max over triples of d(a1, a3) - max(d(a1, a2), d(a2, a3)); <= 0 iff d is an ultrametric.
    """
    return check_inequality(UltrametricDescriptor(), d, threads)


def ptolemy_defect(d: FinMetric, threads: int | None = 1) -> DefectReport:
    """
    max over 4-tuples of d13 * d24 - d12 * d34 - d14 * d23; <= 0 iff Ptolemaic.
    """
    return check_inequality(PtolemyDescriptor(), d, threads)


def hyperbolicity_delta(d: FinMetric, threads: int | None = 1) -> DefectReport:
    """
    Smallest delta for which d is Gromov hyperbolic.

    delta = max(0, max over 4-tuples of (d13 + d24 - max(d12 + d34, d14 + d23)) / 2);
    the unclipped maximum is kept in details["raw"].
    """
    report = check_inequality(HyperbolicityDescriptor(0), d, threads)
    raw = report.defect / 2
    return DefectReport(
        "hyperbolicity",
        max(Fraction(0), raw),
        report.witness,
        True,
        details={"raw": raw},
    )


# ===============================================================================
# SUB-HOMOGENEITY
# ===============================================================================

@dataclass(frozen=True)
class ProbeReport:
    """
    Outcome of sampling f(r x) <= r**c f(x).
    """
    descriptor: str
    degree: int
    checked: int
    counterexamples: tuple[dict[str, Any], ...] = field(default_factory=tuple)

    @property
    def holds(self) -> bool:
        return not self.counterexamples

    def to_dict(self) -> dict[str, Any]:
        return {
            "descriptor": self.descriptor,
            "degree": self.degree,
            "checked": self.checked,
            "holds": self.holds,
            "counterexamples": to_jsonable(list(self.counterexamples)),
        }


def subhomogeneity_probe(descriptor: InequalityDescriptor, samples: Iterable[FinMetric],
                         scales: Iterable[Any]) -> ProbeReport:
    """
    Check f(r x) <= r**c f(x) on sample spaces (first n points, in order) and scales r > 0.

    Exact for rational descriptors; the cycle descriptor is compared within
    its solver tolerance. A counterexample means the declared degree is wrong
    (hyperbolicity at delta > 0 is the expected one).
    """
    factors = [parse_scalar(r) for r in scales]
    counterexamples: list[dict[str, Any]] = []
    checked = 0
    for index, sample in enumerate(samples):
        if sample.size < descriptor.n:
            raise MetricError(ErrorCode.ARITY_EXCEEDS_SPACE, "Sample has fewer points than the descriptor arity.",
                              sample=index, points=sample.size, n=descriptor.n)
        points = sample.labels[:descriptor.n]
        base = descriptor.value(sample, points)
        for r in factors:
            if r <= 0:
                raise MetricError(ErrorCode.NONPOSITIVE_PARAMETER, "Scales must be positive.", r=format_scalar(r))
            lhs = descriptor.value(scale(sample, r), points)
            if descriptor.exact:
                rhs = r ** descriptor.degree * base
                ok = lhs <= rhs
            else:
                rhs = float(r) ** descriptor.degree * base
                tol = getattr(descriptor, "config", Cycl0Config()).tol
                ok = lhs <= rhs + tol * max(1.0, float(r), abs(rhs))
            checked += 1
            if not ok:
                counterexamples.append({"sample": index, "r": r, "lhs": lhs, "rhs": rhs})
    logger.info(f"subhomogeneity_probe(): {descriptor.key} {checked} check(s), "
                f"{len(counterexamples)} counterexample(s)")
    return ProbeReport(descriptor.key, descriptor.degree, checked, tuple(counterexamples))


# ===============================================================================
# PARAMETERS
# ===============================================================================

class MetricInequalityParameter(TransmissibleParameter):
    """
    The (n, f)-inequality as a transmissible parameter with a single index q = 1.

    Singular exactly when the descriptor stores a violating space; the witness
    space for diameter epsilon is that violator rescaled to diameter epsilon.
    """

    def __init__(self, descriptor: InequalityDescriptor, scan_config: ScanConfig | None = None) -> None:
        super().__init__(scan_config)
        self._descriptor = descriptor

    @property
    def name(self) -> str:
        return self._descriptor.key

    @property
    def descriptor(self) -> InequalityDescriptor:
        return self._descriptor

    @property
    def singular(self) -> bool:
        return self._descriptor.singular

    @property
    def finite_q(self) -> bool:
        return True

    def q_enum(self) -> Iterator[int]:
        yield 1

    def arity(self, q: Any, limit: int) -> list[int]:
        return [self._descriptor.n] if self._descriptor.n <= limit else []

    def tuples(self, labels: Sequence[str], size: int) -> Iterable[tuple[str, ...]]:
        return self._descriptor.tuples(labels)

    def phi(self, q: Any, a: tuple[str, ...], z: Fraction, d: FinMetric) -> Any:
        return self._descriptor.value(d, a)

    def in_target(self, q: Any, value: Any) -> bool:
        return self._descriptor.holds(value)

    def minimal_cardinality(self, q: Any) -> int:
        if not self.singular:
            raise self._not_singular()
        return self._descriptor.n

    def singular_space(self, q: Any, epsilon: Fraction, cardinality: int | None = None) -> FinMetric:
        violator = self._descriptor.violator()
        if violator is None:
            raise self._not_singular()
        return pad_space(scale(violator, Fraction(epsilon) / diam(violator)), cardinality)

    def parse_q(self, text: str) -> int:
        if text.strip() not in ("", "1"):
            raise MetricError(ErrorCode.INVALID_INDEX, f"{self.name} has the single index 1, got {text!r}.")
        return 1

    def describe(self) -> dict[str, Any]:
        return {**super().describe(), **self._descriptor.describe()}


class HyperbolicityParameter(TransmissibleParameter):
    """
    Gromov hyperbolicity with index delta in {0, 1/2, 1, 3/2, ...}.

    The value of a 4-tuple is (d13 + d24 - max(d12 + d34, d14 + d23)) / 2 and
    the target is [.., delta]. Every finite space is hyperbolic for some delta,
    and small violating spaces do not exist for delta > 0, so the parameter is
    not singular.
    """

    @property
    def name(self) -> str:
        return "hyperbolicity"

    def q_enum(self) -> Iterator[Fraction]:
        for k in count(0):
            yield Fraction(k, 2)

    def arity(self, q: Any, limit: int) -> list[int]:
        return [4] if limit >= 4 else []

    def tuples(self, labels: Sequence[str], size: int) -> Iterable[tuple[str, ...]]:
        return dihedral_tuples(labels, 4)

    def phi(self, q: Any, a: tuple[str, ...], z: Fraction, d: FinMetric) -> Fraction:
        return -HyperbolicityDescriptor(0).value(d, a) / 2

    def in_target(self, q: Any, value: Fraction) -> bool:
        return value <= q

    def parse_q(self, text: str) -> Fraction:
        values = parse_assignments(text)
        delta = parse_scalar(values.get("delta", values.get("0", "0")))
        if delta < 0:
            raise MetricError(ErrorCode.NONPOSITIVE_PARAMETER, "delta must be nonnegative.",
                              delta=format_scalar(delta))
        return delta
