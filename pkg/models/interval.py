from __future__ import annotations

import math
from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field, model_validator


class Interval(BaseModel):
    """Closed real interval [lo, hi]. Degenerate when lo == hi."""
    lo: float = Field(
        ...,
        description="Lower endpoint (inclusive).",
        json_schema_extra={"example": 80.0},
    )
    hi: float = Field(
        ...,
        description="Upper endpoint (inclusive).",
        json_schema_extra={"example": 90.0},
    )

    model_config = {
        "frozen": True,
        "json_schema_extra": {
            "example": {"lo": 80.0, "hi": 90.0}
        },
    }

    @model_validator(mode="after")
    def _ordered_and_finite(self) -> "Interval":
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"Interval endpoints must be finite, got [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise ValueError(f"Interval lower bound {self.lo} exceeds upper bound {self.hi}")
        return self

    @classmethod
    def point(cls, value: float) -> "Interval":
        return cls(lo=value, hi=value)

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return (self.lo + self.hi) / 2

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi

    def contains_interval(self, other: "Interval", tolerance: float = 0.0) -> bool:
        return self.lo - tolerance <= other.lo and other.hi <= self.hi + tolerance

    def __str__(self) -> str:
        return f"[{self.lo!r},{self.hi!r}]"


class UncertainLabel(str, Enum):
    """Binary label that may be unknown. UNKNOWN stands for the dunno interval [0,1]."""
    ZERO = "0"
    ONE = "1"
    UNKNOWN = "?"

    @classmethod
    def known(cls, value: int) -> "UncertainLabel":
        if value == 0:
            return cls.ZERO
        if value == 1:
            return cls.ONE
        raise ValueError(f"Known labels are 0 or 1, got {value!r}")

    @property
    def is_known(self) -> bool:
        return self is not UncertainLabel.UNKNOWN

    @property
    def value_or_none(self) -> Optional[int]:
        if self is UncertainLabel.UNKNOWN:
            return None
        return int(self.value)

    def as_interval(self) -> Interval:
        if self is UncertainLabel.UNKNOWN:
            return Interval(lo=0.0, hi=1.0)
        return Interval.point(float(self.value))
