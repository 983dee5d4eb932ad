import enum
from typing import List, Optional

from pydantic import BaseModel, Field, model_validator


class CertificateKind(str, enum.Enum):
    UNIFORM_DEVIATION = "uniform_deviation"
    ERM_EXCESS = "erm_excess"


class CertificateInputs(BaseModel):
    p: int
    m: int
    C: float
    rho: float
    c: float
    delta: float


class CertificateComponents(BaseModel):
    complexity: float
    confidence: float


class Certificate(BaseModel):
    kind: CertificateKind
    value: float
    delta: float = Field(gt=0, lt=1)
    components: CertificateComponents
    inputs: CertificateInputs

    @model_validator(mode="after")
    def value_is_sum_of_components(self):
        if self.value != self.components.complexity + self.components.confidence:
            raise ValueError("Certificate value must equal the sum of its components")
        return self


class DeviationReport(BaseModel):
    gap: float
    gaps: List[float]
    covering_C: float
    certificate: Optional[Certificate] = None


class CertificateValidation(BaseModel):
    trials: int
    covered: int
    coverage: float
    delta: float
    certificate_values: List[float]
    realized_gaps: List[float]
