from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.core.config import settings
from app.models.loss import LossKind
from app.models.step_function import ExtensionMode


class RunConfig(BaseModel):
    """Options shared by the command-line subcommands."""
    model_config = ConfigDict(populate_by_name=True)

    input: Optional[Path] = None
    target: Optional[str] = None
    loss: LossKind = LossKind.SQUARED
    lambdas: List[float] = Field(default_factory=list, alias="lambda")
    seed: Optional[int] = None
    draws: int = Field(default_factory=lambda: settings.DEFAULT_DRAWS, ge=1)
    delta: float = Field(default=0.05, gt=0, lt=1)
    out: Optional[Path] = None
    intercept: bool = False
    extension: ExtensionMode = ExtensionMode.CLAMP

    @field_validator("lambdas")
    @classmethod
    def non_negative(cls, v: List[float]) -> List[float]:
        if any(not lam >= 0 for lam in v):
            raise ValueError("lambda must be >= 0")
        return v
