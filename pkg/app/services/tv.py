"""
TVService.
Total-variation arithmetic for step functions, the exact supremum of
sum(gamma_i f(x_i)) over GAM_1(1), and the conversions between value
sequences, triangle weights and step functions.
"""
from typing import Optional
import logging

import numpy as np

from app.core.exceptions import DataError
from app.models.dataset import tie_group_starts
from app.models.step_function import ExtensionMode, StepFunction
from app.models.tv import PartialSums, TriangleWeights

logger = logging.getLogger(__name__)


def compensated_cumsum(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """
    Cumulative sum along `axis` with the rounding error of every step added
    back (TwoSum on the sequential partial sums).
    Integer input is summed exactly and returned unchanged in dtype.
    """
    values = np.asarray(values)
    if np.issubdtype(values.dtype, np.integer):
        return np.cumsum(values, axis=axis)
    values = np.moveaxis(values.astype(float), axis, -1)
    sums = np.cumsum(values, axis=-1)
    previous = np.concatenate([np.zeros_like(sums[..., :1]), sums[..., :-1]], axis=-1)
    virtual = sums - previous
    errors = (previous - (sums - virtual)) + (values - virtual)
    return np.moveaxis(sums + np.cumsum(errors, axis=-1), -1, axis)


class TVService:
    @staticmethod
    def total_variation(f: StepFunction, mode: Optional[ExtensionMode] = None) -> float:
        """
        Compact mode (default): |v_1| + sum |v_t - v_t+1| + |v_n|.
        Clamp mode drops the two boundary terms. Empty functions have TV 0.
        """
        return f.total_variation(mode or ExtensionMode.COMPACT)

    @staticmethod
    def partial_sums(gammas) -> PartialSums:
        gammas = np.asarray(gammas, dtype=float).reshape(-1)
        prefix = np.concatenate([[0.0], compensated_cumsum(gammas)])
        gammas.setflags(write=False)
        prefix.setflags(write=False)
        return PartialSums(gammas=gammas, prefix=prefix)

    @staticmethod
    def merge_ties(gammas, x) -> np.ndarray:
        gammas = np.asarray(gammas, dtype=float).reshape(-1)
        x = np.asarray(x, dtype=float).reshape(-1)
        if gammas.shape != x.shape:
            raise DataError(f"{len(gammas)} coefficients for {len(x)} sample points")
        if len(x) == 0:
            return gammas
        return np.add.reduceat(gammas, tie_group_starts(x))

    @staticmethod
    def sup_from_merged(merged: np.ndarray) -> np.ndarray:
        """
        Half the range of the prefix sums (including the empty prefix) along
        the last axis; works on a batch of merged coefficient rows.
        """
        prefix = compensated_cumsum(merged, axis=-1)
        high = prefix.max(axis=-1, initial=0)
        low = prefix.min(axis=-1, initial=0)
        return (high - low) / 2

    @staticmethod
    def sup_gam1(gammas, x) -> float:
        """
        sup over f in GAM_1(1) of sum gamma_i f(x_i), computed exactly as
        1/2 max_{i<=j} |Gamma_ij| = 1/2 (max Gamma - min Gamma) after merging ties.
        """
        merged = TVService.merge_ties(gammas, x)
        return float(TVService.sup_from_merged(merged))

    @staticmethod
    def sup_gam1_bound(gammas, x) -> float:
        """Right-hand side of the prefix-range inequality over the unmerged prefixes."""
        sums = TVService.partial_sums(gammas)
        if len(np.asarray(x).reshape(-1)) != len(sums.gammas):
            raise DataError("gammas and x must have the same length")
        return float((sums.prefix.max() - sums.prefix.min()) / 2)

    @staticmethod
    def v_to_w(v) -> TriangleWeights:
        """
        Triangle weights with 2 sum|w| = |v_1| + sum|v_i - v_i+1| + |v_m| and
        sum_{i <= k <= j} w_ij = v_k for every k.

        Each round removes one index: the smallest-index maximiser, or the
        smallest-index minimiser when every remaining value is negative, and
        records how the weights of the shorter sequence are spliced back.
        """
        v = np.asarray(v, dtype=float).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise DataError("v must be finite")
        if len(v) == 0:
            return TriangleWeights(entries={})

        alive = list(range(len(v)))
        removals = []
        while len(alive) > 1:
            values = v[alive]
            a = int(np.argmax(values)) if values.max() >= 0 else int(np.argmin(values))
            star = alive[a]
            pred = alive[a - 1] if a > 0 else None
            succ = alive[a + 1] if a + 1 < len(alive) else None
            prev_value = v[pred] if pred is not None else 0.0
            next_value = v[succ] if succ is not None else 0.0
            mirrored = values.max() < 0
            # the case test compares the neighbours on the side the extremum faces
            if (next_value < prev_value) != mirrored and next_value != prev_value:
                removals.append((star, pred, succ, "left", v[star] - prev_value))
            else:
                removals.append((star, pred, succ, "right", v[star] - next_value))
            del alive[a]

        last = alive[0]
        w = {(last, last): float(v[last])}
        for star, pred, succ, side, diagonal in reversed(removals):
            if side == "left" and pred is not None:
                moved = {i: w.pop((i, pred)) for (i, j) in list(w) if j == pred}
                for i, value in moved.items():
                    w[(i, star)] = value
            elif side == "right" and succ is not None:
                moved = {j: w.pop((succ, j)) for (i, j) in list(w) if i == succ}
                for j, value in moved.items():
                    w[(star, j)] = value
            w[(star, star)] = float(diagonal)

        return TriangleWeights(entries={key: val for key, val in w.items() if val != 0.0})

    @staticmethod
    def w_to_step(w: TriangleWeights, x) -> StepFunction:
        """
        Step function sum 2 w_ij phi_ij with phi_ij = 1/2 [x_i <= . < x_j+1]:
        its value at sample k is the coverage sum of w over pairs i <= k <= j.
        """
        x = np.asarray(x, dtype=float).reshape(-1)
        if len(w) == 0:
            return StepFunction.zero()
        return TVService.min_tv_interpolant(x, w.coverage(len(x)))

    @staticmethod
    def min_tv_interpolant(x, v) -> StepFunction:
        """
        Compact-mode step function with f(x_t) = v_t and the smallest TV:
        knots at the distinct x, value v_t from x_t up to the next knot.
        """
        x = np.asarray(x, dtype=float).reshape(-1)
        v = np.asarray(v, dtype=float).reshape(-1)
        if x.shape != v.shape:
            raise DataError(f"{len(x)} sample points but {len(v)} values")
        if len(x) == 0:
            return StepFunction.zero()
        starts = tie_group_starts(x)
        ends = np.append(starts[1:], len(x))
        for start, end in zip(starts, ends):
            if np.any(v[start:end] != v[start]):
                raise DataError(f"Tied sample points at x={x[start]!r} carry different values")
        return StepFunction(knots=x[starts], values=v[starts], extension_mode=ExtensionMode.COMPACT)
