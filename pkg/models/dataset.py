from __future__ import annotations

from enum import Enum
from typing import Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .interval import Interval, UncertainLabel


class DataPoint(BaseModel):
    features: Tuple[Interval, ...] = Field(
        ...,
        description="One interval per covariate; precise values are degenerate intervals.",
        json_schema_extra={"example": [{"lo": 4.25, "hi": 4.25}, {"lo": 80.0, "hi": 90.0}]},
    )
    label: UncertainLabel = Field(
        ...,
        description="Outcome label: '0', '1' or '?' (unknown).",
        json_schema_extra={"example": "1"},
    )

    model_config = {
        "frozen": True,
        "json_schema_extra": {
            "example": {
                "features": [{"lo": 4.25, "hi": 4.25}, {"lo": 80.0, "hi": 90.0}],
                "label": "?",
            }
        },
    }

    @property
    def is_precise(self) -> bool:
        return self.label.is_known and all(iv.degenerate for iv in self.features)


class Dataset(BaseModel):
    """Interval-valued dataset with possibly unknown labels. Immutable; transforms return new datasets."""
    feature_names: Tuple[str, ...] = Field(
        ...,
        description="Covariate names, one per feature column.",
        json_schema_extra={"example": ["x"]},
    )
    label_name: str = Field(
        default="y",
        description="Name of the label column.",
        json_schema_extra={"example": "y"},
    )
    points: Tuple[DataPoint, ...] = Field(
        default=(),
        description="Rows of the dataset.",
    )

    model_config = {
        "frozen": True,
        "json_schema_extra": {
            "example": {
                "feature_names": ["age"],
                "label_name": "death",
                "points": [
                    {"features": [{"lo": 35.0, "hi": 35.0}], "label": "0"},
                    {"features": [{"lo": 80.0, "hi": 90.0}], "label": "1"},
                    {"features": [{"lo": 62.0, "hi": 62.0}], "label": "?"},
                ],
            }
        },
    }

    @model_validator(mode="after")
    def _shared_dimension(self) -> "Dataset":
        m = len(self.feature_names)
        for i, point in enumerate(self.points):
            if len(point.features) != m:
                raise ValueError(f"Row {i} has {len(point.features)} features, expected {m}")
        return self

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def dimension(self) -> int:
        return len(self.feature_names)

    def lower(self) -> np.ndarray:
        """(n, m) array of lower endpoints."""
        return np.array([[iv.lo for iv in p.features] for p in self.points], dtype=float).reshape(self.n, self.dimension)

    def upper(self) -> np.ndarray:
        """(n, m) array of upper endpoints."""
        return np.array([[iv.hi for iv in p.features] for p in self.points], dtype=float).reshape(self.n, self.dimension)

    def labels(self) -> np.ndarray:
        """Labels as floats, NaN where unknown."""
        return np.array(
            [np.nan if p.label is UncertainLabel.UNKNOWN else float(p.label.value) for p in self.points],
            dtype=float,
        )

    @property
    def unknown_rows(self) -> list[int]:
        return [i for i, p in enumerate(self.points) if not p.label.is_known]

    @property
    def interval_cells(self) -> list[tuple[int, int]]:
        """(row, column) of every non-degenerate feature cell, row-major."""
        return [
            (i, j)
            for i, p in enumerate(self.points)
            for j, iv in enumerate(p.features)
            if not iv.degenerate
        ]

    @property
    def uncertain_rows(self) -> list[int]:
        return [i for i, p in enumerate(self.points) if not p.is_precise]

    @property
    def has_interval_features(self) -> bool:
        return any(not iv.degenerate for p in self.points for iv in p.features)

    @property
    def is_precise(self) -> bool:
        return all(p.is_precise for p in self.points)

    def with_points(self, points) -> "Dataset":
        return Dataset(feature_names=self.feature_names, label_name=self.label_name, points=tuple(points))


class CensorMode(str, Enum):
    """How a precise value x becomes an interval of width 2*epsilon."""
    SYMMETRIC = "symmetric"
    LEFT_BIASED = "left_biased"
    RIGHT_BIASED = "right_biased"
    SPLIT_BIASED = "split_biased"


class CollapseStrategy(str, Enum):
    MIDPOINT = "midpoint"
    DROP_UNCERTAIN = "drop_uncertain"


class CovariateKind(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


class Covariate(BaseModel):
    """One column of a mixed synthetic draw: uniform on [lo, hi], or 0/1 with P(1) = rate."""
    name: str = Field(..., min_length=1, json_schema_extra={"example": "age"})
    kind: CovariateKind = Field(CovariateKind.CONTINUOUS)
    lo: float = Field(0.0, description="Lower end of a continuous draw.")
    hi: float = Field(1.0, description="Upper end of a continuous draw.")
    rate: float = Field(0.5, ge=0.0, le=1.0, description="P(x = 1) of a binary draw.")

    model_config = {
        "frozen": True,
        "json_schema_extra": {
            "example": {"name": "inhalation", "kind": "binary", "rate": 0.2},
        },
    }

    @model_validator(mode="after")
    def _ordered_range(self) -> "Covariate":
        if self.kind is CovariateKind.CONTINUOUS and not self.lo <= self.hi:
            raise ValueError(f"Covariate {self.name}: lo must not exceed hi, got [{self.lo}, {self.hi}]")
        return self
