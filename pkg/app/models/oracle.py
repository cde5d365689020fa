# app/models/oracle.py

from pydantic import BaseModel, ConfigDict, Field


class CompositeCheckReport(BaseModel):
    """Deviation of the F-tensor statistics from traces against the dense composite state."""

    model_config = ConfigDict(frozen=True)

    expectation_deviation: float = Field(ge=0.0)
    probability_deviation: float = Field(ge=0.0)
    conditional_deviation: float = Field(ge=0.0)
    composite_dim: int

    @property
    def max_deviation(self) -> float:
        return max(self.expectation_deviation, self.probability_deviation, self.conditional_deviation)


class OracleCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    max_deviation: float
    tolerance: float
    cases: int = 0

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance
