"""
ModelFileService.
Reads and writes fitted models as canonical JSON documents. Numbers are
written in shortest round-trip form, so save -> load -> save is
byte-identical and predictions do not drift.
"""
from pathlib import Path
from typing import Optional, Sequence
import logging
import math

from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import DataError
from app.models.gam import GamModel
from app.models.step_function import StepFunction
from app.schemas.model_file import FitMetadata, ModelFile, WeightFunctionEntry

logger = logging.getLogger(__name__)


class ModelFileService:
    @staticmethod
    def to_document(
        model: GamModel,
        metadata: Optional[FitMetadata] = None,
        feature_names: Sequence[str] = (),
    ) -> ModelFile:
        modes = {f.extension_mode for f in model.weight_functions}
        if len(modes) > 1:
            raise DataError("All weight functions of a saved model must share one extension mode")
        return ModelFile(
            format_version=settings.MODEL_FORMAT_VERSION,
            p=model.p,
            intercept=model.intercept,
            extension_mode=modes.pop(),
            budget_used=model.budget_used,
            weight_functions=[
                WeightFunctionEntry(
                    knots=f.knots.tolist(), values=f.values.tolist(), right_extent=f.right_extent
                )
                for f in model.weight_functions
            ],
            fit=metadata or FitMetadata(),
            feature_names=list(feature_names),
        )

    @staticmethod
    def to_model(document: ModelFile) -> GamModel:
        if document.format_version != settings.MODEL_FORMAT_VERSION:
            raise DataError(
                f"Unsupported model format version {document.format_version} "
                f"(expected {settings.MODEL_FORMAT_VERSION})"
            )
        if len(document.weight_functions) != document.p:
            raise DataError(f"Model declares p={document.p} but has {len(document.weight_functions)} weight functions")
        if document.feature_names and len(document.feature_names) != document.p:
            raise DataError(f"Model has {len(document.feature_names)} feature names for p={document.p}")
        model = GamModel(
            weight_functions=tuple(
                StepFunction(
                    knots=entry.knots,
                    values=entry.values,
                    extension_mode=document.extension_mode,
                    right_extent=entry.right_extent,
                )
                for entry in document.weight_functions
            ),
            intercept=document.intercept,
        )
        if not math.isclose(model.budget_used, document.budget_used, rel_tol=1e-9, abs_tol=1e-12):
            raise DataError(
                f"Stored budget_used {document.budget_used} does not match the weight functions ({model.budget_used})"
            )
        return model

    @staticmethod
    def dumps(document: ModelFile) -> str:
        return document.model_dump_json(indent=2) + "\n"

    @staticmethod
    def loads(text: str) -> ModelFile:
        try:
            return ModelFile.model_validate_json(text)
        except ValidationError as e:
            raise DataError(f"Malformed model file: {e}")

    @staticmethod
    def save(
        model: GamModel,
        path: Path,
        metadata: Optional[FitMetadata] = None,
        feature_names: Sequence[str] = (),
    ) -> ModelFile:
        document = ModelFileService.to_document(model, metadata, feature_names)
        Path(path).write_text(ModelFileService.dumps(document), encoding="utf-8")
        logger.info(f"Saved model (p={model.p}, budget={model.budget_used:.6g}) to {path}")
        return document

    @staticmethod
    def load(path: Path) -> tuple[GamModel, ModelFile]:
        path = Path(path)
        if not path.is_file():
            raise DataError(f"Model file {path} does not exist")
        document = ModelFileService.loads(path.read_text(encoding="utf-8"))
        return ModelFileService.to_model(document), document
