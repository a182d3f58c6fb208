"""
JSON documents for metrics and subset families.

A metric document is {"points": [...], "matrix": [[...], ...]} with entries
given as numbers, decimal strings or "p/q" strings; numbers are read through
their shortest decimal form (0.1 is 1/10). A family document is
{"parts": [["a", "b"], ...]} with the target metric of each part read from
its own metric document, in part order. Parts may instead embed their targets,
{"parts": [<metric document>, ...]}, and then need no separate files.
"""

import hashlib
import json
from pathlib import Path
from typing import Annotated, Any, Sequence

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from metric_amalgam.amalgam_logic.core import FinMetric, validate
from metric_amalgam.amalgam_logic.errors import ErrorCode, MetricError
from metric_amalgam.amalgam_logic.gluing import SubsetFamily

Entry = int | float | str


class MetricDocument(BaseModel):
    """
    Serialised finite metric.
    """
    model_config = ConfigDict(extra="forbid")

    points: Annotated[
        list[str],
        Field(
            description="Point labels, distinct.",
            title="Points",
            examples=[["a", "b", "c"]],
        ),
    ]
    matrix: Annotated[
        list[list[Entry]],
        Field(
            description="Square distance matrix in point order; exact scalars.",
            title="Matrix",
            examples=[[["0", "1", "2"], ["1", "0", "1"], ["2", "1", "0"]]],
        ),
    ]

    def to_metric(self) -> FinMetric:
        """
        Validate into a FinMetric.

        :raises InvalidMetricError: listing every violated axiom.
        """
        return validate(self.points, self.matrix)

    @classmethod
    def from_metric(cls, metric: FinMetric) -> "MetricDocument":
        return cls(**metric.to_dict())


class FamilyDocument(BaseModel):
    """
    Disjoint parts, given as label lists or with their target metrics embedded.
    """
    model_config = ConfigDict(extra="forbid")

    parts: Annotated[
        list[list[str] | MetricDocument],
        Field(
            description="Parts A_i as label lists, or as metric documents carrying e_i.",
            title="Parts",
            examples=[[["a", "b"], ["c"]]],
            min_length=1,
        ),
    ]

    @property
    def embedded(self) -> bool:
        return all(isinstance(part, MetricDocument) for part in self.parts)

    @property
    def listed(self) -> bool:
        return all(isinstance(part, list) for part in self.parts)

    def to_family(self, targets: Sequence[FinMetric] | None = None) -> tuple[SubsetFamily, list[FinMetric]]:
        """
        Build the subset family and its target metrics.

        :param targets: One metric per listed part, in part order; must be omitted
            when the parts embed their metrics.
        :return: The subset family and the validated target metrics.
        :raises MetricError: InvalidDocument when the parts and targets do not fit
            together, LabelMismatch when a target lives on other points than its part.
        """
        if self.embedded:
            if targets:
                raise MetricError(ErrorCode.INVALID_DOCUMENT,
                                  "Family parts embed their metrics; separate part metrics are not accepted.",
                                  part_files=len(targets))
            embedded = [part.to_metric() for part in self.parts]  # type: ignore[union-attr]
            return SubsetFamily(tuple(target.labels for target in embedded)), embedded
        if not self.listed:
            raise MetricError(ErrorCode.INVALID_DOCUMENT,
                              "Family parts mix label lists and embedded metrics.")

        given = list(targets or [])
        if len(given) != len(self.parts):
            raise MetricError(ErrorCode.INVALID_DOCUMENT,
                              f"Family lists {len(self.parts)} parts but {len(given)} part metrics were given.",
                              parts=len(self.parts), part_files=len(given))
        for i, (labels, target) in enumerate(zip(self.parts, given)):
            if set(labels) != set(target.labels) or len(labels) != target.size:
                raise MetricError(ErrorCode.LABEL_MISMATCH, f"Part {i} does not match the points of its metric.",
                                  part=i, labels=list(labels), points=list(target.labels))
        return SubsetFamily(tuple(tuple(labels) for labels in self.parts)), given  # type: ignore[arg-type]


def _read_json(path: str | Path) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except json.JSONDecodeError as e:
        raise MetricError(ErrorCode.INVALID_DOCUMENT, f"{path}: not valid JSON ({e.msg}).", path=str(path)) from e


def _parse(model: type[BaseModel], path: str | Path) -> Any:
    try:
        return model.model_validate(_read_json(path))
    except ValidationError as e:
        raise MetricError(ErrorCode.INVALID_DOCUMENT, f"{path}: {e.error_count()} validation error(s).",
                          path=str(path), errors=[error["msg"] for error in e.errors()]) from e


def load_metric(path: str | Path) -> FinMetric:
    """
    Read and validate a metric document.

    :raises MetricError: InvalidDocument, or the validation error of the matrix.
    """
    return _parse(MetricDocument, path).to_metric()


def load_family(path: str | Path,
                part_paths: Sequence[str | Path] | None = None) -> tuple[SubsetFamily, list[FinMetric]]:
    """
    Read a family document and, for label-list parts, one metric document per part.

    :param path: Family document.
    :param part_paths: Metric documents of the parts, in part order.
    :raises MetricError: InvalidDocument, LabelMismatch, or the validation error of a part.
    """
    document = _parse(FamilyDocument, path)
    targets = [load_metric(part_path) for part_path in part_paths or []]
    return document.to_family(targets or None)


def file_digest(path: str | Path) -> str:
    """SHA-256 of a file's bytes, hex encoded."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
