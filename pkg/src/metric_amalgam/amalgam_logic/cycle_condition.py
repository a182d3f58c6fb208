"""
Planar cycle condition cycl_m(0).

For a cyclic tuple a_0..a_{m-1} we look for planar points g_i with
|g_i - g_{i+1}| <= d(a_i, a_{i+1}) and |g_i - g_j| >= d(a_i, a_j) for
non-adjacent i, j, maximising the smallest slack. The problem is nonconvex;
the search is a squared-violation penalty descent from several starts, then
max-min-slack penalty stages of increasing weight and a constrained polish,
so an infeasible verdict is heuristic.

Floating point is used here only.
"""

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from loguru import logger
from scipy.optimize import minimize

from metric_amalgam.amalgam_logic.config import Cycl0Config, Cycl0Status
from metric_amalgam.amalgam_logic.core import FinMetric
from metric_amalgam.amalgam_logic.errors import ErrorCode, MetricError
from metric_amalgam.utils.parallel import ordered_map
from metric_amalgam.utils.scalar import format_float

_NORM_EPS = 1e-18


@dataclass(frozen=True)
class Cycl0Result:
    """
    Best planar configuration found for one cyclic tuple.
    """
    status: Cycl0Status
    tuple_labels: tuple[str, ...]
    points: tuple[tuple[float, float], ...]
    best_slack: float

    @property
    def residual(self) -> float:
        """Amount by which the best configuration misses feasibility (0 if feasible)."""
        return max(0.0, -self.best_slack)

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status.value,
            "tuple": list(self.tuple_labels),
            "best_slack": format_float(self.best_slack),
            "residual": format_float(self.residual),
            "points": [[format_float(x), format_float(y)] for x, y in self.points],
        }


def cycle_pairs(m: int) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """
    Adjacent pairs (i, i+1 mod m) and non-adjacent pairs (i < j, j - i not +-1 mod m).
    """
    adjacent = [(i, (i + 1) % m) for i in range(m)]
    non_adjacent = [
        (i, j) for i in range(m) for j in range(i + 1, m)
        if (j - i) % m not in (1, m - 1)
    ]
    return adjacent, non_adjacent


def classical_scaling(distances: np.ndarray, dim: int = 2) -> np.ndarray:
    """
    Classical multidimensional scaling into the plane.

    Exact (up to rounding) for distance matrices of planar point sets.
    """
    n = distances.shape[0]
    centering = np.eye(n) - np.ones((n, n)) / n
    gram = -0.5 * centering @ (distances ** 2) @ centering
    eigenvalues, eigenvectors = np.linalg.eigh(gram)
    order = np.argsort(eigenvalues)[::-1][:dim]
    weights = np.sqrt(np.clip(eigenvalues[order], 0.0, None))
    coords = eigenvectors[:, order] * weights
    if coords.shape[1] < dim:
        coords = np.hstack([coords, np.zeros((n, dim - coords.shape[1]))])
    return coords


class _CycleProblem:
    """
    Slack functions and derivatives for one normalised distance matrix.
    """

    def __init__(self, distances: np.ndarray):
        self.m = distances.shape[0]
        adjacent, non_adjacent = cycle_pairs(self.m)
        self.pairs = np.array(adjacent + non_adjacent, dtype=int)
        # +1: slack = D - |g_i - g_j| ; -1: slack = |g_i - g_j| - D
        self.sign = np.array([1.0] * len(adjacent) + [-1.0] * len(non_adjacent))
        self.target = distances[self.pairs[:, 0], self.pairs[:, 1]]

    def _lengths(self, flat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        points = flat.reshape(self.m, 2)
        diff = points[self.pairs[:, 0]] - points[self.pairs[:, 1]]
        lengths = np.sqrt(np.sum(diff ** 2, axis=1) + _NORM_EPS)
        return diff, lengths

    def slacks(self, flat: np.ndarray) -> np.ndarray:
        _, lengths = self._lengths(flat)
        return self.sign * (self.target - lengths)

    def slack_jacobian(self, flat: np.ndarray) -> np.ndarray:
        diff, lengths = self._lengths(flat)
        units = diff / lengths[:, None]
        jac = np.zeros((len(self.pairs), 2 * self.m))
        for k, (i, j) in enumerate(self.pairs):
            jac[k, 2 * i:2 * i + 2] = -self.sign[k] * units[k]
            jac[k, 2 * j:2 * j + 2] = self.sign[k] * units[k]
        return jac

    def penalty(self, flat: np.ndarray) -> tuple[float, np.ndarray]:
        """Sum of squared violations and its gradient."""
        violation = np.clip(-self.slacks(flat), 0.0, None)
        gradient = -2.0 * violation @ self.slack_jacobian(flat)
        return float(np.sum(violation ** 2)), gradient

    def level_penalty(self, z: np.ndarray, weight: float) -> tuple[float, np.ndarray]:
        """
        -t + weight * sum(max(0, t - slack_k)**2) over points and level t = z[-1], with gradient.
        """
        flat, level = z[:-1], z[-1]
        gap = np.clip(level - self.slacks(flat), 0.0, None)
        grad = np.empty_like(z)
        grad[:-1] = -2.0 * weight * gap @ self.slack_jacobian(flat)
        grad[-1] = -1.0 + 2.0 * weight * float(np.sum(gap))
        return -level + weight * float(np.sum(gap ** 2)), grad

    def min_slack(self, flat: np.ndarray) -> float:
        return float(np.min(self.slacks(flat)))


def _solve_from(problem: _CycleProblem, start: np.ndarray, config: Cycl0Config) -> tuple[float, np.ndarray]:
    max_iter = config.max_iter
    flat = start.ravel().astype(float)
    descent = minimize(problem.penalty, flat, jac=True, method="L-BFGS-B", options={"maxiter": max_iter})
    flat = descent.x

    for weight in config.penalty_weights:
        stage = minimize(problem.level_penalty, np.append(flat, problem.min_slack(flat)), args=(weight,),
                         jac=True, method="L-BFGS-B", options={"maxiter": max_iter})
        candidate = stage.x[:-1]
        if np.all(np.isfinite(candidate)) and problem.min_slack(candidate) > problem.min_slack(flat):
            flat = candidate

    def negative_level(z: np.ndarray) -> float:
        return -z[-1]

    def negative_level_grad(z: np.ndarray) -> np.ndarray:
        grad = np.zeros_like(z)
        grad[-1] = -1.0
        return grad

    def level_constraints(z: np.ndarray) -> np.ndarray:
        return problem.slacks(z[:-1]) - z[-1]

    def level_constraints_jac(z: np.ndarray) -> np.ndarray:
        jac = problem.slack_jacobian(z[:-1])
        return np.hstack([jac, -np.ones((jac.shape[0], 1))])

    start_level = problem.min_slack(flat)
    polish = minimize(
        negative_level,
        np.append(flat, start_level),
        jac=negative_level_grad,
        method="SLSQP",
        constraints=[{"type": "ineq", "fun": level_constraints, "jac": level_constraints_jac}],
        options={"maxiter": max_iter, "ftol": 1e-14},
    )
    polished = polish.x[:-1]
    if np.all(np.isfinite(polished)) and problem.min_slack(polished) > start_level:
        flat = polished
    return problem.min_slack(flat), flat.reshape(problem.m, 2)


def accepts_slack(slack: float, distances: np.ndarray, tol: float) -> bool:
    """
    Whether a min slack counts as feasible: slack >= -tol * diameter of the tuple.

    The solver works at unit diameter, so the tolerance scales with the tuple.
    """
    return slack >= -tol * float(np.max(distances))


def best_min_slack(distances: np.ndarray, config: Cycl0Config | None = None) -> tuple[float, np.ndarray]:
    """
    Largest smallest slack found over planar configurations of a cyclic distance matrix.

    The matrix is normalised to unit diameter and the answer rescaled; the
    slack is positively homogeneous of degree one.

    :param distances: m x m symmetric matrix, rows in cyclic order.
    :param config: Solver settings.
    :return: (best min slack, m x 2 points).
    """
    config = config or Cycl0Config()
    m = distances.shape[0]
    if m <= 3:
        # only "not longer" constraints: collapse every point
        adjacent, _ = cycle_pairs(m)
        return float(min(distances[i, j] for i, j in adjacent)), np.zeros((m, 2))

    unit = float(np.max(distances))
    normalised = distances / unit
    problem = _CycleProblem(normalised)
    anchor = classical_scaling(normalised)
    starts = [anchor] + [
        anchor + np.random.default_rng([config.seed, k]).normal(scale=config.init_scale, size=anchor.shape)
        for k in range(1, config.restarts)
    ]
    runs = ordered_map(lambda start: _solve_from(problem, start, config), starts, config.threads)
    best_index = max(range(len(runs)), key=lambda k: (runs[k][0], -k))
    slack, points = runs[best_index]
    logger.debug(f"best_min_slack(): m={m}, best slack {slack * unit:.6g} from start {best_index}")
    return slack * unit, points * unit


def cycl0_check(d: FinMetric, a: Sequence[str], tol: float | None = None, restarts: int | None = None,
                seed: int | None = None, config: Cycl0Config | None = None) -> Cycl0Result:
    """
    Search a planar configuration certifying the cycl_m(0) condition for one cyclic tuple.

    :param d: Metric space.
    :param a: Injective tuple of m >= 3 labels, in cyclic order.
    :param tol: Overrides config.tol.
    :param restarts: Overrides config.restarts.
    :param seed: Overrides config.seed.
    :param config: Base solver settings.
    :return: Feasible with the configuration, or Infeasible with the best (negative) slack.
    :raises MetricError: TupleNotInjective, ArityTooSmall, UnknownLabel.
    """
    settings = (config or Cycl0Config()).model_copy(update={
        key: value for key, value in {"tol": tol, "restarts": restarts, "seed": seed}.items() if value is not None
    })
    labels = tuple(a)
    if len(set(labels)) != len(labels):
        raise MetricError(ErrorCode.TUPLE_NOT_INJECTIVE, "Cycle tuple repeats a point.", tuple=list(labels))
    if len(labels) < 3:
        raise MetricError(ErrorCode.ARITY_TOO_SMALL, "A cycle needs at least three points.", m=len(labels))
    distances = np.array([[float(d(x, y)) for y in labels] for x in labels])
    slack, points = best_min_slack(distances, settings)
    status = Cycl0Status.FEASIBLE if accepts_slack(slack, distances, settings.tol) else Cycl0Status.INFEASIBLE
    logger.info(f"cycl0_check(): m={len(labels)} -> {status.value} (slack {slack:.6g})")
    return Cycl0Result(
        status=status,
        tuple_labels=labels,
        points=tuple((float(x), float(y)) for x, y in points),
        best_slack=slack,
    )
