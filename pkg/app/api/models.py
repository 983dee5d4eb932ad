from fastapi import APIRouter

from app.api.deps import service_errors
from app.schemas.api import FitRequest, FitResponse, PredictRequest, PredictResponse
from app.schemas.model_file import FitMetadata
from app.services.gam import GamService
from app.services.persistence import ModelFileService
from app.services.solver import SolverService

router = APIRouter(prefix="/models", tags=["models"])


@router.post("/fit", response_model=FitResponse)
def fit_model(request: FitRequest):
    """
    Fit a TV-regularized GAM on the posted dataset and return it as a model
    document together with the fit report.
    """
    with service_errors():
        data = GamService.build_dataset(
            request.data.features, request.data.targets, request.data.feature_names
        )
        model, report = SolverService.fit(data, request.loss.to_spec(), request.config)
        metadata = FitMetadata(
            lam=report.lam,
            loss=report.loss,
            seed=request.config.seed,
            objective=report.final_objective,
            solver=report.solver,
            converged=report.converged,
        )
        document = ModelFileService.to_document(model, metadata, data.feature_names)
    return FitResponse(model=document, report=report)


@router.post("/predict", response_model=PredictResponse)
def predict(request: PredictRequest):
    with service_errors():
        model = ModelFileService.to_model(request.model)
        predictions = GamService.predict_many(model, request.features)
    return PredictResponse(predictions=predictions.tolist())
