import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from app.core.exceptions import ConfigError, DataError


class LossKind(str, enum.Enum):
    SQUARED = "squared"
    LOGISTIC = "logistic"
    HINGE = "hinge"
    ABSOLUTE = "absolute"


CLASSIFICATION_KINDS = {LossKind.LOGISTIC, LossKind.HINGE}
SMOOTH_KINDS = {LossKind.SQUARED, LossKind.LOGISTIC}

# Upper bound on d^2 loss / d prediction^2, per sample.
CURVATURE = {LossKind.SQUARED: 2.0, LossKind.LOGISTIC: 0.25}


def _magnitude(bounds: tuple[float, float] | None) -> float | None:
    if bounds is None:
        return None
    return max(abs(bounds[0]), abs(bounds[1]))


@dataclass(frozen=True)
class LossSpec:
    """
    Loss function l(prediction, target) with the Lipschitz constant rho and
    the bound c the certificates need.

    `lipschitz` / `bound` are None when unbounded. Squared loss is only
    Lipschitz over a declared box of predictions and targets. An optional
    `clip` caps the loss value, which bounds it (c = clip) but makes it
    non-convex.
    """
    kind: LossKind
    prediction_range: tuple[float, float] | None = None
    target_range: tuple[float, float] | None = None
    clip: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", LossKind(self.kind))
        for name in ("prediction_range", "target_range"):
            bounds = getattr(self, name)
            if bounds is None:
                continue
            lo, hi = (float(b) for b in bounds)
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
                raise ConfigError(f"{name} must be a finite interval, got {bounds}")
            object.__setattr__(self, name, (lo, hi))
        if self.clip is not None and not self.clip > 0:
            raise ConfigError(f"clip must be positive, got {self.clip}")

    @property
    def is_classification(self) -> bool:
        return self.kind in CLASSIFICATION_KINDS

    @property
    def is_smooth(self) -> bool:
        return self.kind in SMOOTH_KINDS and self.clip is None

    @property
    def is_convex(self) -> bool:
        return self.clip is None

    @property
    def curvature(self) -> float | None:
        return CURVATURE.get(self.kind)

    @property
    def lipschitz(self) -> float | None:
        if self.kind != LossKind.SQUARED:
            return 1.0
        a, b = _magnitude(self.prediction_range), _magnitude(self.target_range)
        if a is None or b is None:
            return None
        return 2.0 * (a + b)

    @property
    def bound(self) -> float | None:
        a, b = _magnitude(self.prediction_range), _magnitude(self.target_range)
        natural = None
        if a is not None:
            if self.kind == LossKind.LOGISTIC:
                natural = float(np.logaddexp(0.0, a))
            elif self.kind == LossKind.HINGE:
                natural = 1.0 + a
            elif b is not None:
                natural = (a + b) ** 2 if self.kind == LossKind.SQUARED else a + b
        if self.clip is None:
            return natural
        return self.clip if natural is None else min(self.clip, natural)

    def validate_targets(self, targets: np.ndarray) -> None:
        if not self.is_classification:
            return
        bad = np.flatnonzero((targets != 1.0) & (targets != -1.0))
        if len(bad):
            raise DataError(
                f"{self.kind.value} loss needs labels in {{-1, +1}}; "
                f"row {int(bad[0])} has target {targets[bad[0]]!r}"
            )

    def value(self, prediction, target):
        prediction = np.asarray(prediction, dtype=float)
        target = np.asarray(target, dtype=float)
        if self.kind == LossKind.SQUARED:
            out = (prediction - target) ** 2
        elif self.kind == LossKind.LOGISTIC:
            out = np.logaddexp(0.0, -prediction * target)
        elif self.kind == LossKind.HINGE:
            out = np.maximum(0.0, 1.0 - prediction * target)
        else:
            out = np.abs(prediction - target)
        if self.clip is not None:
            out = np.minimum(out, self.clip)
        return out

    def gradient(self, prediction, target):
        """Derivative (a subgradient for hinge/absolute) in the prediction."""
        prediction = np.asarray(prediction, dtype=float)
        target = np.asarray(target, dtype=float)
        if self.kind == LossKind.SQUARED:
            grad = 2.0 * (prediction - target)
        elif self.kind == LossKind.LOGISTIC:
            grad = -target * expit(-prediction * target)
        elif self.kind == LossKind.HINGE:
            grad = np.where(prediction * target < 1.0, -target, 0.0)
        else:
            grad = np.sign(prediction - target)
        if self.clip is not None:
            grad = np.where(self.value(prediction, target) >= self.clip, 0.0, grad)
        return grad

    def hessian(self, prediction, target):
        """Second derivative in the prediction; smooth losses only."""
        if not self.is_smooth:
            raise ConfigError(f"{self.kind.value} loss has no second derivative")
        prediction = np.asarray(prediction, dtype=float)
        target = np.asarray(target, dtype=float)
        if self.kind == LossKind.SQUARED:
            return np.full(np.broadcast(prediction, target).shape, 2.0)
        margin = prediction * target
        return expit(margin) * expit(-margin)
