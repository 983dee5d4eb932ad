from dataclasses import dataclass

import numpy as np

from app.core.exceptions import DataError


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def tie_group_starts(x) -> np.ndarray:
    """Start offsets of runs of equal values in sorted x."""
    x = np.asarray(x, dtype=float)
    if np.any(np.diff(x) < 0):
        raise DataError("x must be sorted ascending")
    is_start = np.ones(len(x), dtype=bool)
    is_start[1:] = x[1:] != x[:-1]
    return np.flatnonzero(is_start)


@dataclass(frozen=True)
class FeatureOrder:
    """
    Sort order i(1..m) of the samples along one feature, plus its tie groups.

    `order[t]` is the sample at sorted position t (stable sort).
    Tie group g occupies `order[group_starts[g]:group_starts[g + 1]]` and
    all its samples share the feature value `values[g]`.
    `group_of[i]` is the tie group of sample i.
    """
    order: np.ndarray
    group_starts: np.ndarray
    group_of: np.ndarray
    values: np.ndarray

    @classmethod
    def from_column(cls, column: np.ndarray) -> "FeatureOrder":
        order = np.argsort(column, kind="stable")
        ordered = column[order]
        group_starts = tie_group_starts(ordered)
        group_ids = np.zeros(len(ordered), dtype=np.int64)
        group_ids[group_starts[1:]] = 1
        group_ids = np.cumsum(group_ids)
        group_of = np.empty(len(column), dtype=np.int64)
        group_of[order] = group_ids
        return cls(
            order=_frozen(order),
            group_starts=_frozen(group_starts),
            group_of=_frozen(group_of),
            values=_frozen(ordered[group_starts].copy()),
        )

    @property
    def n_groups(self) -> int:
        return len(self.group_starts)

    @property
    def group_sizes(self) -> np.ndarray:
        return np.diff(np.append(self.group_starts, len(self.order)))

    def merge(self, per_sample: np.ndarray) -> np.ndarray:
        """Sum per-sample coefficients over tie groups, in sorted order (last axis)."""
        return np.add.reduceat(per_sample[..., self.order], self.group_starts, axis=-1)


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    targets: np.ndarray
    feature_orders: tuple[FeatureOrder, ...]
    feature_names: tuple[str, ...] = ()

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]
