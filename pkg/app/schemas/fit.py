import enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.core.config import settings
from app.models.step_function import ExtensionMode


class StepRule(str, enum.Enum):
    EXACT_PROX_FOR_SQUARED = "exact_prox_for_squared"
    PROXIMAL_GRADIENT_FOR_SMOOTH = "proximal_gradient_for_smooth"


class FitConfig(BaseModel):
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    lam: float = Field(alias="lambda", ge=0)
    max_outer_iters: int = Field(default_factory=lambda: settings.FIT_MAX_OUTER_ITERS, ge=1)
    tol: float = Field(default_factory=lambda: settings.FIT_TOL, gt=0)
    step_rule: Optional[StepRule] = None   # None: exact prox for squared, proximal gradient otherwise
    inner_iters: int = Field(default_factory=lambda: settings.FIT_INNER_ITERS, ge=1)
    seed: int = 0
    shuffle_blocks: bool = False
    intercept: bool = False
    extension_mode: ExtensionMode = ExtensionMode.CLAMP


class FitReport(BaseModel):
    lam: float
    loss: str
    solver: str
    objective_trace: List[float]
    final_objective: float
    iterations: int
    converged: bool
    budget_used: float
