from __future__ import annotations

import math
from typing import Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from .coefficients import Coefficients, FitOptions
from .run import RunStamp


class CandidateModel(BaseModel):
    beta: Tuple[float, ...] = Field(
        ...,
        min_length=1,
        description="Fitted coefficients (intercept first).",
        json_schema_extra={"example": [-4.61, 0.93]},
    )
    provenance: str = Field(
        ...,
        description="Which corner, enumeration or extremization produced this candidate.",
        json_schema_extra={"example": "min:beta1"},
    )
    separation: bool = Field(
        False,
        description="The fit hit the separation cap; coefficients are capped.",
        json_schema_extra={"example": False},
    )

    model_config = {"frozen": True}

    @field_validator("beta")
    @classmethod
    def _finite(cls, beta: Tuple[float, ...]) -> Tuple[float, ...]:
        if not all(math.isfinite(b) for b in beta):
            raise ValueError(f"Candidate coefficients must be finite, got {beta}")
        return beta

    @property
    def coefficients(self) -> Coefficients:
        return Coefficients(beta=self.beta)


class ModelSet(BaseModel):
    """Finite candidate set whose pointwise prediction envelope approximates the imprecise model."""
    models: Tuple[CandidateModel, ...] = Field(..., min_length=1)
    feature_names: Tuple[str, ...] = Field(default=(), json_schema_extra={"example": ["x"]})
    digest: str = Field(
        ...,
        description="SHA-256 of the training dataset.",
        json_schema_extra={"example": "3b1f0c..."},
    )
    run: Optional[RunStamp] = None

    model_config = {
        "frozen": True,
        "json_schema_extra": {
            "example": {
                "models": [
                    {"beta": [-5.62, 1.12], "provenance": "corner:0", "separation": False},
                    {"beta": [-4.71, 1.02], "provenance": "corner:1", "separation": False},
                    {"beta": [-6.40, 1.30], "provenance": "max:beta1", "separation": False},
                ],
                "feature_names": ["x"],
                "digest": "3b1f0c...",
            }
        },
    }

    @model_validator(mode="after")
    def _shared_dimension(self) -> "ModelSet":
        dims = {len(c.beta) for c in self.models}
        if len(dims) != 1:
            raise ValueError(f"All candidate models must share one dimension, got lengths {sorted(dims)}")
        if self.feature_names and len(self.feature_names) != dims.pop() - 1:
            raise ValueError("feature_names must have one entry per non-intercept coefficient")
        return self

    @property
    def dimension(self) -> int:
        return len(self.models[0].beta) - 1

    @property
    def coefficient_bounds(self) -> list[tuple[float, float]]:
        """Per-coefficient [min, max] across candidates."""
        return [
            (min(c.beta[i] for c in self.models), max(c.beta[i] for c in self.models))
            for i in range(self.dimension + 1)
        ]


class EnvelopeOptions(BaseModel):
    refine_budget: int = Field(500, description="Fit evaluations allowed per extremization.")
    tolerance: float = Field(1e-8, gt=0.0, description="Minimum objective improvement accepted by the local search.")
    include_corners: bool = Field(True, description="Keep the column-orientation corner fits in the result.")
    threshold_cuts: int = Field(
        64, ge=0, description="Most midpoint cuts fitted as split-orientation candidates; 0 disables."
    )
    exact_threshold: int = Field(
        12, ge=0, le=24, description="Enumerate label completions (and small corner lattices) up to 2^this."
    )
    line_search_iterations: int = Field(6, ge=0, description="Bounded Brent evaluations for an interior cell value.")
    probe_points: Tuple[Tuple[float, ...], ...] = Field(
        default=(), description="Feature vectors whose fitted score is also extremized."
    )
    fit: FitOptions = Field(default_factory=FitOptions)
    n_jobs: int = Field(1, description="joblib worker count for candidate fits.")

    model_config = {"frozen": True}


class BruteForceLimits(BaseModel):
    max_label_combos: int = Field(4096, ge=1, description="Largest 2^q label lattice allowed.")
    max_feature_corners: int = Field(4096, ge=1, description="Largest 2^k cell-corner lattice allowed.")
    fit: FitOptions = Field(default_factory=FitOptions)
    n_jobs: int = Field(1)

    model_config = {"frozen": True}


class ContainmentReport(BaseModel):
    n_datasets: int
    violations: int
    violation_rate: float
    tolerance: float
    violating_draws: Tuple[int, ...] = Field(default=(), description="Indices of draws that left the envelope.")
    worst_excess: float = Field(0.0, description="Largest distance outside the envelope over all draws.")
    run: Optional[RunStamp] = None

    model_config = {"frozen": True}
