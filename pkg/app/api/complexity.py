import numpy as np
from fastapi import APIRouter

from app.api.deps import service_errors
from app.schemas.api import ComplexityRequest, TightnessRequest
from app.schemas.complexity import BoundInputs, BoundReport, ComplexityKind, ComplexityReport, TightnessReport
from app.services.complexity import ComplexityService
from app.services.gam import GamService

router = APIRouter(prefix="/complexity", tags=["complexity"])


@router.post("/estimate", response_model=ComplexityReport)
def estimate(request: ComplexityRequest):
    """
    Monte-Carlo complexity of GAM_p(C) on the posted feature matrix.
    """
    with service_errors():
        data = GamService.build_dataset(request.features, np.zeros(len(request.features)))
        return ComplexityService.estimate_complexity(
            data, request.C, request.kind, request.draws, request.seed
        )


@router.post("/bound", response_model=BoundReport)
def bound(inputs: BoundInputs, kind: ComplexityKind = ComplexityKind.RADEMACHER):
    with service_errors():
        value = ComplexityService.theorem_bound(inputs, kind)
    return BoundReport(**inputs.model_dump(), kind=kind, bound=value)


@router.post("/tightness", response_model=TightnessReport)
def tightness(request: TightnessRequest):
    with service_errors():
        return ComplexityService.tightness_experiment(request.p, request.m, request.draws, request.seed)
