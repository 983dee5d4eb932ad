import enum
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from app.core.exceptions import DataError


class ExtensionMode(str, enum.Enum):
    COMPACT = "compact"
    CLAMP = "clamp"


@dataclass(frozen=True)
class StepFunction:
    """
    Right-continuous piecewise-constant weight function.

    f(x) = values[t] on [knots[t], knots[t + 1]); at and after the last knot
    the value depends on the extension mode:

    - compact: values[-1] on [knots[-1], knots[-1] + right_extent], 0 outside
      [knots[0], knots[-1] + right_extent].
    - clamp: values[0] before the first knot, values[-1] after the last.

    An empty function (no knots) is identically zero.
    """
    knots: np.ndarray
    values: np.ndarray
    extension_mode: ExtensionMode = ExtensionMode.COMPACT
    right_extent: float = 0.0

    def __post_init__(self):
        knots = np.array(self.knots, dtype=float).reshape(-1)
        values = np.array(self.values, dtype=float).reshape(-1)
        if knots.shape != values.shape:
            raise DataError(f"{len(knots)} knots but {len(values)} values")
        if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(values))):
            raise DataError("Step function knots and values must be finite")
        if np.any(np.diff(knots) <= 0):
            raise DataError("Step function knots must be strictly increasing")
        if not np.isfinite(self.right_extent) or self.right_extent < 0:
            raise DataError(f"right_extent must be finite and >= 0, got {self.right_extent}")
        knots.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "extension_mode", ExtensionMode(self.extension_mode))

    @classmethod
    def zero(cls, extension_mode: ExtensionMode = ExtensionMode.COMPACT) -> "StepFunction":
        return cls(knots=np.empty(0), values=np.empty(0), extension_mode=extension_mode)

    @property
    def size(self) -> int:
        return len(self.knots)

    @property
    def is_empty(self) -> bool:
        return self.size == 0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_empty:
            return np.zeros_like(x) if x.ndim else 0.0
        idx = np.searchsorted(self.knots, x, side="right") - 1
        out = self.values[np.clip(idx, 0, self.size - 1)]
        if self.extension_mode == ExtensionMode.COMPACT:
            outside = (idx < 0) | (x > self.knots[-1] + self.right_extent)
            out = np.where(outside, 0.0, out)
        return out if x.ndim else float(out)

    def total_variation(self, mode: ExtensionMode | None = None) -> float:
        """Sum of jump sizes; compact mode adds the jumps from and back to zero."""
        if self.is_empty:
            return 0.0
        jumps = float(np.abs(np.diff(self.values)).sum())
        if ExtensionMode(mode or self.extension_mode) == ExtensionMode.COMPACT:
            jumps += abs(self.values[0]) + abs(self.values[-1])
        return jumps

    def with_mode(self, extension_mode: ExtensionMode) -> "StepFunction":
        return replace(self, extension_mode=ExtensionMode(extension_mode))

    def reparametrize(self, transform: Callable[[np.ndarray], np.ndarray]) -> "StepFunction":
        """Apply a strictly increasing map to the knots; values are untouched."""
        return replace(self, knots=np.asarray(transform(self.knots), dtype=float))

    def compress(self) -> "StepFunction":
        """
        Drop interior knots whose value repeats the previous one.
        The last knot always stays (it carries the right boundary in compact
        mode), and an all-zero function becomes the empty function.
        """
        if self.is_empty or not np.any(self.values):
            return StepFunction.zero(self.extension_mode)
        keep = np.ones(self.size, dtype=bool)
        keep[1:] = self.values[1:] != self.values[:-1]
        keep[-1] = True
        return replace(self, knots=self.knots[keep], values=self.values[keep])
