"""
Pytest configuration and shared fixtures.

This file contains fixtures that are available to all tests.
"""

import json
from fractions import Fraction
from pathlib import Path

import pytest
from loguru import logger

from metric_amalgam.amalgam_logic.config import Cycl0Config, RunConfig, ScanConfig
from metric_amalgam.amalgam_logic.core import (
    FinMetric,
    cycle_graph_metric,
    equilateral,
    line_metric,
    validate,
)


# ===============================================================================
# Metric Fixtures
# ===============================================================================

@pytest.fixture
def line3():
    """Three collinear points a, b, c at 0, 1, 2."""
    return line_metric([0, 1, 2], ["a", "b", "c"])


@pytest.fixture
def line3_stretched():
    """Same points as line3 with d(a, c) raised to 3/2 (no longer collinear)."""
    return validate(["a", "b", "c"], [["0", "1", "3/2"], ["1", "0", "1"], ["3/2", "1", "0"]])


@pytest.fixture
def triangle_345():
    """Right triangle with sides 3, 4, 5 on x, y, z."""
    return validate(["x", "y", "z"], [[0, 3, 4], [3, 0, 5], [4, 5, 0]])


@pytest.fixture
def equilateral3():
    """Three points at mutual distance 1 (an ultrametric)."""
    return equilateral(["p", "q", "r"])


@pytest.fixture
def square_c4():
    """Shortest-path metric of the 4-cycle: sides 1, diagonals 2."""
    return cycle_graph_metric(4, ["v0", "v1", "v2", "v3"])


@pytest.fixture
def euclidean_square():
    """Unit square with diagonals 7/5, just below sqrt 2; Ptolemaic."""
    return validate(
        ["v0", "v1", "v2", "v3"],
        [
            ["0", "1", "7/5", "1"],
            ["1", "0", "1", "7/5"],
            ["7/5", "1", "0", "1"],
            ["1", "7/5", "1", "0"],
        ],
    )


@pytest.fixture
def star_tree():
    """Tree metric: centre o with leaves at distances 1, 2, 3."""
    return validate(
        ["o", "l1", "l2", "l3"],
        [[0, 1, 2, 3], [1, 0, 3, 4], [2, 3, 0, 5], [3, 4, 5, 0]],
    )


@pytest.fixture
def ultrametric_tree():
    """Four-point ultrametric: two pairs at distance 1, 2 between the pairs."""
    return validate(
        ["a", "b", "c", "d"],
        [[0, 1, 2, 2], [1, 0, 2, 2], [2, 2, 0, 1], [2, 2, 1, 0]],
    )


@pytest.fixture
def geometric_line():
    """Points 0, 1, 1/2, 1/4, ..., 1/32 on the line (labels g0..g6)."""
    points = [Fraction(0)] + [Fraction(1, 2 ** k) for k in range(6)]
    return line_metric(points, [f"g{i}" for i in range(len(points))])


# ===============================================================================
# Configuration Fixtures
# ===============================================================================

@pytest.fixture
def scan_config():
    """Small scan limits for fast parameter tests."""
    return ScanConfig(max_subset=6, max_chain=6, q_budget=4, subset_budget=5000, threads=1)


@pytest.fixture
def cycl0_config():
    """Deterministic cycle-condition solver settings."""
    return Cycl0Config(tol=1e-6, restarts=16, seed=0, threads=1)


@pytest.fixture
def run_config(cycl0_config):
    """Run settings as the command line builds them."""
    return RunConfig(threads=1, cycl0=cycl0_config)


# ===============================================================================
# Document Fixtures
# ===============================================================================

@pytest.fixture
def write_metric(tmp_path):
    """Write a FinMetric (or raw document) to a JSON file and return its path."""

    def write(metric: FinMetric | dict, name: str = "metric.json") -> Path:
        path = tmp_path / name
        document = metric if isinstance(metric, dict) else metric.to_dict()
        path.write_text(json.dumps(document), encoding="utf-8")
        return path

    return write


# ===============================================================================
# Logging Fixtures
# ===============================================================================

@pytest.fixture
def error_log():
    """Collect ERROR records emitted through loguru while the test runs."""
    messages: list[str] = []
    handler_id = logger.add(lambda message: messages.append(message.record["message"]), level="ERROR")
    yield messages
    logger.remove(handler_id)


# ===============================================================================
# Pytest Configuration
# ===============================================================================

def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line(
        "markers", "integration: marks tests as integration tests (deselect with '-m \"not integration\"')"
    )
    config.addinivalue_line(
        "markers", "slow: marks tests as slow (deselect with '-m \"not slow\"')"
    )
