"""
Configuration classes for scans, the cycle-condition solver and command line runs.

Separates tuning knobs from the algorithms; every model validates its ranges.
"""

from enum import Enum
from pathlib import Path
from typing import Annotated, Any

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator

from metric_amalgam.amalgam_logic.errors import ErrorCode, MetricError


class VerdictKind(Enum):
    """
    Outcome of a budgeted property decision.
    """
    SATISFIED = "satisfied"
    ANTI_SATISFIED = "anti_satisfied"
    UNKNOWN = "unknown"


class Cycl0Status(Enum):
    """
    Outcome of the planar cycle-condition search.
    """
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"


class Cycl0Config(BaseModel):
    """
    Settings of the cycl_m(0) penalty solver.
    """
    model_config = ConfigDict(populate_by_name=True)

    tol: Annotated[
        float,
        Field(
            default=1e-6,
            description="Slack tolerance relative to the tuple diameter; min slack >= -tol * diam is accepted.",
            title="Tolerance",
            examples=["1e-6"],
            gt=0.0,
        ),
    ]
    restarts: Annotated[
        int,
        Field(
            default=64,
            description="Number of starts (the first is the classical scaling embedding).",
            title="Restarts",
            examples=["64"],
            ge=1,
        ),
    ]
    seed: Annotated[
        int,
        Field(
            default=0,
            description="Seed of the Gaussian restart perturbations.",
            title="Seed",
            examples=["0"],
            ge=0,
        ),
    ]
    init_scale: Annotated[
        float,
        Field(
            default=0.5,
            description="Standard deviation of restart perturbations (unit-diameter scale).",
            title="Init-Scale",
            examples=["0.5"],
            gt=0.0,
        ),
    ]
    max_iter: Annotated[
        int,
        Field(
            default=500,
            description="Iteration cap of each local solve.",
            title="Max-Iter",
            examples=["500"],
            ge=1,
        ),
    ]
    threads: Annotated[
        int | None,
        Field(
            default=1,
            description="Workers for independent restarts; None or 0 uses every core.",
            title="Threads",
            examples=["4"],
            ge=0,
        ),
    ]
    penalty_weights: Annotated[
        list[float],
        Field(
            default_factory=lambda: [1.0, 10.0, 100.0],
            description="Weights of the successive max-min-slack penalty stages run before the polish.",
            title="Penalty-Weights",
            examples=["[1, 10, 100]"],
            min_length=1,
        ),
    ]

    @field_validator("penalty_weights")
    @classmethod
    def _validate_penalty_weights(cls, value: list[float]) -> list[float]:
        """Validate penalty weights."""
        if any(weight <= 0 for weight in value):
            raise ValueError(f"Invalid penalty_weights: {value}. Weights must be positive")
        if any(later < earlier for earlier, later in zip(value, value[1:])):
            raise ValueError(f"Invalid penalty_weights: {value}. Weights must not decrease")
        return value


class ScanConfig(BaseModel):
    """
    Limits of the combinatorial scans.
    """
    model_config = ConfigDict(populate_by_name=True)

    max_subset: Annotated[
        int | None,
        Field(
            default=None,
            description="Largest subset size scanned by the doubling check; None scans every size.",
            title="Max-Subset",
            examples=["6"],
            ge=2,
        ),
    ]
    max_chain: Annotated[
        int | None,
        Field(
            default=None,
            description="Longest chain scanned by the uniform disconnectedness modulus; None scans every length.",
            title="Max-Chain",
            examples=["5"],
            ge=2,
        ),
    ]
    q_budget: Annotated[
        int,
        Field(
            default=16,
            description="Number of parameter indices enumerated by a property verdict.",
            title="Q-Budget",
            examples=["16"],
            ge=1,
        ),
    ]
    subset_budget: Annotated[
        int | None,
        Field(
            default=None,
            description="Cap on subsets scanned by the richness search; None scans all.",
            title="Subset-Budget",
            examples=["1000"],
            ge=1,
        ),
    ]
    exhaustive: Annotated[
        bool,
        Field(
            default=False,
            description="Ignore max_subset / max_chain and scan every tuple size.",
            title="Exhaustive",
            examples=["false"],
        ),
    ]
    threads: Annotated[
        int | None,
        Field(
            default=1,
            description="Workers for data-parallel stages; None or 0 uses every core.",
            title="Threads",
            examples=["4"],
            ge=0,
        ),
    ]


class RunConfig(ScanConfig):
    """
    Command line run settings: scan limits plus seeding, logging and solver options.
    """
    seed: Annotated[
        int,
        Field(
            default=0,
            description="Seed for every randomised stage.",
            title="Seed",
            examples=["0"],
            ge=0,
        ),
    ]
    log_level: Annotated[
        str,
        Field(
            default="WARNING",
            description="Console log level.",
            title="Log-Level",
            examples=["INFO"],
        ),
    ]
    timing: Annotated[
        bool,
        Field(
            default=False,
            description="Add wall-clock timing to the report (breaks byte-identical output).",
            title="Timing",
            examples=["false"],
        ),
    ]
    cycl0: Annotated[
        Cycl0Config,
        Field(
            default_factory=Cycl0Config,
            description="Cycle-condition solver settings.",
            title="Cycl0",
        ),
    ]

    @field_validator("log_level")
    @classmethod
    def _validate_log_level(cls, value: str) -> str:
        """Validate log level."""
        valid_levels = ["TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"]
        if value.upper() not in valid_levels:
            raise ValueError(
                f"Invalid log_level: '{value}'. "
                f"Valid options are: {', '.join(valid_levels)}"
            )
        return value.upper()

    @classmethod
    def from_yaml(cls, path: str | Path, **overrides: Any) -> "RunConfig":
        """
        Load settings from a YAML mapping, then apply overrides (e.g. CLI flags).

        :param path: YAML file.
        :param overrides: Values taking precedence over the file; None values are ignored.
        :return: Validated RunConfig.
        :raises MetricError: InvalidDocument if the file is not a mapping.
        """
        with open(path, "r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle) or {}
        if not isinstance(data, dict):
            raise MetricError(ErrorCode.INVALID_DOCUMENT, f"Config file {path} must contain a mapping.")
        cycl0 = dict(data.pop("cycl0", {}) or {})
        cycl0.update({key: value for key, value in overrides.pop("cycl0", {}).items() if value is not None})
        data.update({key: value for key, value in overrides.items() if value is not None})
        data["cycl0"] = cycl0
        return cls(**data)
