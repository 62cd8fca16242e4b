from __future__ import annotations

import math
from typing import Optional, Tuple

from pydantic import BaseModel, Field, field_validator

from .run import RunStamp


class Coefficients(BaseModel):
    """Regression vector (beta_0 ... beta_m); index 0 is the intercept."""
    beta: Tuple[float, ...] = Field(
        ...,
        min_length=1,
        description="Intercept followed by one coefficient per feature.",
        json_schema_extra={"example": [-5.0, 1.0]},
    )

    model_config = {
        "frozen": True,
        "json_schema_extra": {"example": {"beta": [-5.0, 1.0]}},
    }

    @field_validator("beta")
    @classmethod
    def _finite(cls, beta: Tuple[float, ...]) -> Tuple[float, ...]:
        if not all(math.isfinite(b) for b in beta):
            raise ValueError(f"Coefficients must be finite, got {beta}")
        return beta

    @property
    def intercept(self) -> float:
        return self.beta[0]

    @property
    def dimension(self) -> int:
        """Number of non-intercept coefficients."""
        return len(self.beta) - 1


class FitReport(BaseModel):
    converged: bool = Field(..., description="Gradient max-norm reached the tolerance.")
    iterations: int = Field(..., ge=0, description="Newton iterations taken.")
    final_nll: float = Field(..., description="Unpenalized negative log-likelihood at the returned coefficients.")
    gradient_norm: float = Field(..., ge=0.0, description="Max-norm of the objective gradient (original units).")
    separation_detected: bool = Field(
        False, description="Coefficients hit the separation cap; they are capped and converged is false."
    )

    model_config = {
        "frozen": True,
        "json_schema_extra": {
            "example": {
                "converged": True,
                "iterations": 7,
                "final_nll": 18.42,
                "gradient_norm": 3.1e-12,
                "separation_detected": False,
            }
        },
    }


class FitOptions(BaseModel):
    tolerance: float = Field(1e-8, gt=0.0, description="Gradient max-norm at which the fit counts as converged.")
    max_iterations: int = Field(100, ge=1, description="Newton iteration limit.")
    ridge: float = Field(0.0, ge=0.0, description="Penalty ridge*||beta_without_intercept||^2/2; 0 is pure MLE.")
    separation_cap: float = Field(
        30.0, gt=0.0, description="Per-coefficient cap in standardized units beyond which separation is flagged."
    )

    model_config = {"frozen": True}


class PreciseModel(BaseModel):
    """Persisted single logistic regression: the model JSON read and written by the CLI."""
    beta: Tuple[float, ...] = Field(..., min_length=1, json_schema_extra={"example": [-5.0, 1.0]})
    feature_names: Tuple[str, ...] = Field(..., json_schema_extra={"example": ["x"]})
    report: FitReport
    run: Optional[RunStamp] = None

    @property
    def coefficients(self) -> Coefficients:
        return Coefficients(beta=self.beta)
