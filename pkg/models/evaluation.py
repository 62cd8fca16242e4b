from __future__ import annotations

from enum import Enum
from typing import Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from .interval import Interval
from .run import RunStamp


class Decision(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    DUNNO = "dunno"


class DecisionRule(str, Enum):
    ABSTAIN = "abstain"
    UPPER_BOUND = "upper_bound"
    LOWER_BOUND = "lower_bound"


class TernaryConfusion(BaseModel):
    """Confusion matrix with a separate row for points the classifier abstained on."""
    a: int = Field(..., ge=0, description="Predicted 1, truth 1.")
    b: int = Field(..., ge=0, description="Predicted 1, truth 0.")
    c: int = Field(..., ge=0, description="Predicted 0, truth 1.")
    d: int = Field(..., ge=0, description="Predicted 0, truth 0.")
    e: int = Field(0, ge=0, description="No prediction, truth 1.")
    f: int = Field(0, ge=0, description="No prediction, truth 0.")

    model_config = {
        "frozen": True,
        "json_schema_extra": {"example": {"a": 26, "b": 2, "c": 10, "d": 46, "e": 10, "f": 6}},
    }

    @property
    def total_positive(self) -> int:
        return self.a + self.c + self.e

    @property
    def total_negative(self) -> int:
        return self.b + self.d + self.f

    @property
    def n(self) -> int:
        return self.total_positive + self.total_negative


class IntervalConfusion(BaseModel):
    """Confusion matrix whose cells are count intervals; dunno points count [0,1] in both cells of their column."""
    a: Interval
    b: Interval
    c: Interval
    d: Interval
    total_positive: int = Field(..., ge=0)
    total_negative: int = Field(..., ge=0)
    n: int = Field(..., ge=0)

    model_config = {
        "frozen": True,
        "json_schema_extra": {
            "example": {
                "a": {"lo": 26, "hi": 36},
                "b": {"lo": 2, "hi": 8},
                "c": {"lo": 10, "hi": 20},
                "d": {"lo": 46, "hi": 52},
                "total_positive": 46,
                "total_negative": 54,
                "n": 100,
            }
        },
    }

    @model_validator(mode="after")
    def _columns_completable(self) -> "IntervalConfusion":
        for top, bottom, total, name in (
            (self.a, self.c, self.total_positive, "positive"),
            (self.b, self.d, self.total_negative, "negative"),
        ):
            if not (top.lo + bottom.lo <= total <= top.hi + bottom.hi):
                raise ValueError(f"No integer completion of the {name} column sums to {total}")
        if self.n != self.total_positive + self.total_negative:
            raise ValueError("n must equal total_positive + total_negative")
        return self


class UncertaintyStats(BaseModel):
    """Sensitivity-family statistics; None marks a statistic whose denominator is zero."""
    s: Optional[float] = Field(None, description="Sensitivity, only when nothing was abstained on.")
    t: Optional[float] = Field(None, description="Specificity, only when nothing was abstained on.")
    s_prime: Optional[float] = Field(None, description="Predictive sensitivity a/(a+c).")
    t_prime: Optional[float] = Field(None, description="Predictive specificity d/(b+d).")
    sigma: Optional[float] = Field(None, description="Positive incertitude e/(a+c+e).")
    tau: Optional[float] = Field(None, description="Negative incertitude f/(b+d+f).")

    model_config = {
        "frozen": True,
        "json_schema_extra": {
            "example": {"s": None, "t": None, "s_prime": 0.722, "t_prime": 0.958, "sigma": 0.217, "tau": 0.111}
        },
    }


class RocPoint(BaseModel):
    threshold: float
    fpr: float = Field(..., ge=0.0, le=1.0)
    sensitivity: float = Field(..., ge=0.0, le=1.0)

    model_config = {"frozen": True}


class RocCurve(BaseModel):
    """ROC points ordered by decreasing threshold."""
    points: Tuple[RocPoint, ...]

    model_config = {"frozen": True}


class RocBand(BaseModel):
    fpr: Tuple[float, ...] = Field(..., description="Even fpr grid.")
    s_lo: Tuple[float, ...] = Field(..., description="Pointwise minimum sensitivity over the candidates.")
    s_hi: Tuple[float, ...] = Field(..., description="Pointwise maximum sensitivity over the candidates.")
    auc: Interval = Field(..., description="[min, max] of candidate AUCs.")
    member_aucs: Tuple[float, ...] = Field(..., description="AUC of each candidate, in ModelSet order.")

    model_config = {"frozen": True}


class Roc3DPoint(BaseModel):
    threshold: float
    fpr_prime: Optional[float] = None
    s_prime: Optional[float] = None
    sigma: Optional[float] = None
    tau: Optional[float] = None

    model_config = {"frozen": True}


class Roc3D(BaseModel):
    points: Tuple[Roc3DPoint, ...]

    model_config = {"frozen": True}


class ScatterPoint(BaseModel):
    outcome: int
    jittered: float
    p_lo: float
    p_hi: float

    model_config = {"frozen": True}


class EvaluationReport(BaseModel):
    threshold: float
    rule: DecisionRule
    ternary: TernaryConfusion
    interval_confusion: IntervalConfusion
    stats: UncertaintyStats
    auc: Optional[float] = Field(None, description="AUC when the model is a single precise model.")
    auc_interval: Optional[Interval] = Field(None, description="Interval AUC over the candidate set.")
    run: Optional[RunStamp] = None
