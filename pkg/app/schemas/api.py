from typing import List, Optional, Tuple

from pydantic import BaseModel, Field

from app.core.config import settings
from app.models.loss import LossKind, LossSpec
from app.schemas.bounds import CertificateKind
from app.schemas.complexity import ComplexityKind
from app.schemas.fit import FitConfig, FitReport
from app.schemas.model_file import ModelFile


class DatasetIn(BaseModel):
    features: List[List[float]]
    targets: List[float]
    feature_names: Optional[List[str]] = None


class LossIn(BaseModel):
    kind: LossKind = LossKind.SQUARED
    prediction_range: Optional[Tuple[float, float]] = None
    target_range: Optional[Tuple[float, float]] = None
    clip: Optional[float] = None

    def to_spec(self) -> LossSpec:
        return LossSpec(
            kind=self.kind,
            prediction_range=self.prediction_range,
            target_range=self.target_range,
            clip=self.clip,
        )


class FitRequest(BaseModel):
    data: DatasetIn
    loss: LossIn = Field(default_factory=LossIn)
    config: FitConfig


class FitResponse(BaseModel):
    model: ModelFile
    report: FitReport


class PredictRequest(BaseModel):
    model: ModelFile
    features: List[List[float]]


class PredictResponse(BaseModel):
    predictions: List[float]


class ComplexityRequest(BaseModel):
    features: List[List[float]]
    C: float = 1.0
    kind: ComplexityKind = ComplexityKind.RADEMACHER
    draws: int = Field(default_factory=lambda: settings.DEFAULT_DRAWS)
    seed: int


class TightnessRequest(BaseModel):
    p: int
    m: int
    draws: int = Field(default_factory=lambda: settings.DEFAULT_DRAWS)
    seed: int


class CertifyRequest(BaseModel):
    kind: CertificateKind = CertificateKind.UNIFORM_DEVIATION
    p: int
    m: int
    C: float
    delta: float = 0.05
    rho: Optional[float] = None
    c: Optional[float] = None
    loss: Optional[LossIn] = None
