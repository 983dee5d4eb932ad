from typing import List, Optional

from pydantic import BaseModel

from app.schemas.bounds import DeviationReport


class ModelEvaluation(BaseModel):
    model: str
    lam: float
    objective: float
    train_risk: float
    test_risk: Optional[float] = None
    budget_used: float


class EvaluationReport(BaseModel):
    models: List[ModelEvaluation]
    deviation: Optional[DeviationReport] = None
