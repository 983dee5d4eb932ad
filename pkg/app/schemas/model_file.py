from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.models.step_function import ExtensionMode


class WeightFunctionEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    knots: List[float]
    values: List[float]
    right_extent: float = Field(default=0.0, ge=0)

    @field_validator("knots")
    @classmethod
    def strictly_increasing(cls, v: List[float]) -> List[float]:
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("knots must be strictly increasing")
        return v


class FitMetadata(BaseModel):
    lam: Optional[float] = None
    loss: Optional[str] = None
    seed: Optional[int] = None
    objective: Optional[float] = None
    solver: Optional[str] = None
    converged: Optional[bool] = None


class ModelFile(BaseModel):
    format_version: int
    p: int = Field(ge=1)
    intercept: float = 0.0
    extension_mode: ExtensionMode
    budget_used: float
    weight_functions: List[WeightFunctionEntry]
    fit: FitMetadata = Field(default_factory=FitMetadata)
    feature_names: List[str] = Field(default_factory=list)
