import enum
from typing import List, Optional

from pydantic import BaseModel, Field


class ComplexityKind(str, enum.Enum):
    RADEMACHER = "rademacher"
    GAUSSIAN = "gaussian"


class FeatureDistribution(str, enum.Enum):
    UNIFORM = "uniform"
    NORMAL = "normal"
    RADEMACHER = "rademacher"


class BoundInputs(BaseModel):
    """Inputs of the complexity bound; ranges are checked by the service (p >= 2, m >= 1, C > 0, rho > 0)."""
    p: int
    m: int
    C: float
    rho: float = 1.0


class ComplexityReport(BaseModel):
    kind: ComplexityKind
    estimate: float
    std_error: float = Field(ge=0)
    draws: int = Field(ge=1)
    seed: int
    p: int
    m: int
    C: float
    bound: float
    bound_p: int            # p used for the bound: max(p, 2)
    slack: float
    per_feature_argmax_histogram: List[int]

    def within_bound(self, sigmas: float) -> bool:
        return self.slack >= -sigmas * self.std_error


class KindComparison(BaseModel):
    rademacher: ComplexityReport
    gaussian: ComplexityReport
    combined_std_error: float
    relation_holds: bool    # R <= sqrt(pi/2) G + sigmas * combined SE


class TightnessReport(BaseModel):
    p: int
    m: int
    draws: int
    seed: int
    rademacher_jp: float
    std_error_jp: float
    rademacher_gam: float
    std_error_gam: float
    combined_std_error: float
    containing_budget: float
    rademacher_containing: float
    std_error_containing: float
    ordering_holds: bool
    ordering_holds_at_two: bool
    bound: float


class ScalingRow(BaseModel):
    p: int
    m: int
    estimate: float
    std_error: float
    bound: float
    ratio: float
    distribution: FeatureDistribution
    kind: ComplexityKind = ComplexityKind.RADEMACHER
    within_bound: Optional[bool] = None


class BoundReport(BaseModel):
    p: int
    m: int
    C: float
    rho: float
    kind: ComplexityKind
    bound: float
