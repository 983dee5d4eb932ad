"""
GamService.
Builds datasets and evaluates GAM predictors and losses.
"""
from typing import Optional, Sequence
import logging

import numpy as np

from app.core.exceptions import DataError
from app.models.dataset import Dataset, FeatureOrder
from app.models.gam import GamModel
from app.models.loss import LossSpec

logger = logging.getLogger(__name__)


class GamService:
    @staticmethod
    def build_dataset(
        features,
        targets,
        feature_names: Optional[Sequence[str]] = None,
    ) -> Dataset:
        """
        Validate an m x p feature matrix and its targets and compute the
        per-feature sort orders and tie groups.
        """
        X = np.array(features, dtype=float)
        y = np.array(targets, dtype=float).reshape(-1)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise DataError(f"Features must be a matrix, got {X.ndim} dimensions")
        m, p = X.shape
        if m == 0:
            raise DataError("Dataset has no samples")
        if p == 0:
            raise DataError("Dataset has no features")
        if len(y) != m:
            raise DataError(f"{m} feature rows but {len(y)} targets")

        bad = np.argwhere(~np.isfinite(X))
        if len(bad):
            row, col = (int(v) for v in bad[0])
            raise DataError(f"Non-finite feature value {X[row, col]!r} at row {row}, column {col}")
        bad_targets = np.flatnonzero(~np.isfinite(y))
        if len(bad_targets):
            row = int(bad_targets[0])
            raise DataError(f"Non-finite target {y[row]!r} at row {row}")

        # -0.0 and 0.0 are one point; make ties bitwise-equal
        X = X + 0.0
        names = tuple(feature_names) if feature_names is not None else ()
        if names and len(names) != p:
            raise DataError(f"{len(names)} feature names for {p} features")

        orders = tuple(FeatureOrder.from_column(X[:, j]) for j in range(p))
        X.setflags(write=False)
        y.setflags(write=False)
        logger.debug(f"Built dataset with m={m}, p={p}")
        return Dataset(features=X, targets=y, feature_orders=orders, feature_names=names)

    @staticmethod
    def predict(model: GamModel, x) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        if len(x) != model.p:
            raise DataError(f"Model has p={model.p} but the sample has {len(x)} entries")
        if not np.all(np.isfinite(x)):
            raise DataError("Sample must be finite")
        return model.intercept + sum(float(f(xj)) for f, xj in zip(model.weight_functions, x))

    @staticmethod
    def predict_many(model: GamModel, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != model.p:
            raise DataError(f"Model has p={model.p} but the data has shape {X.shape}")
        out = np.full(X.shape[0], model.intercept)
        for j, f in enumerate(model.weight_functions):
            out += f(X[:, j])
        return out

    @staticmethod
    def loss_value(spec: LossSpec, prediction: float, target: float) -> float:
        spec.validate_targets(np.asarray([target], dtype=float))
        return float(spec.value(prediction, target))

    @staticmethod
    def risk(model: GamModel, data: Dataset, loss: LossSpec) -> float:
        """Mean loss of the model over the dataset."""
        loss.validate_targets(data.targets)
        predictions = GamService.predict_many(model, data.features)
        return float(np.mean(loss.value(predictions, data.targets)))
