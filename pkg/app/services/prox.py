"""
ProxService.
Exact proximal operator of the per-feature TV penalty with boundary terms,
lam * (|v_1| + sum |v_t - v_t+1| + |v_n|), under a weighted squared loss.

The solver runs dynamic programming over the chain: the derivative of the
cost-to-go is kept as a nondecreasing piecewise-linear function (knots
carrying slope/offset increments); the TV coupling clips it to [-lam, lam]
and the backtracking step clips each value into the recorded interval.
"""
from collections import deque
import logging

import numpy as np

from app.core.config import settings
from app.core.exceptions import NonConvergenceError
from app.models.tv import ProxProblem

logger = logging.getLogger(__name__)


def _crossing_from_left(knots: deque, a: float, b: float, level: float):
    """Smallest point where the derivative reaches `level`, consuming knots to its left."""
    floor = -np.inf
    while knots:
        x, da, db = knots[0]
        if a * x + b >= level:
            return min(max((level - b) / a, floor), x), a, b
        knots.popleft()
        a, b = a + da, b + db
        if a * x + b >= level:
            return x, a, b
        floor = x
    return max((level - b) / a, floor), a, b


def _crossing_from_right(knots: deque, a: float, b: float, level: float):
    """Largest point where the derivative is still <= `level`, consuming knots to its right."""
    ceiling = np.inf
    while knots:
        x, da, db = knots[-1]
        if a * x + b <= level:
            return max(min((level - b) / a, ceiling), x), a, b
        knots.pop()
        a, b = a - da, b - db
        if a * x + b <= level:
            return x, a, b
        ceiling = x
    return min((level - b) / a, ceiling), a, b


def _insert_sorted(knots: deque, knot: list) -> None:
    for index, existing in enumerate(knots):
        if existing[0] > knot[0]:
            knots.insert(index, knot)
            return
    knots.append(knot)


def _solve_chain(z: np.ndarray, w: np.ndarray, lam: float) -> np.ndarray:
    n = len(z)
    lower = np.empty(max(n - 1, 0))
    upper = np.empty(max(n - 1, 0))

    # |v_1| (and |v_n| too when n == 1) enters as a jump of the derivative at 0
    boundary = 2.0 if n == 1 else 1.0
    knots = deque([[0.0, 0.0, 2.0 * boundary * lam]])
    left_a, left_b = w[0], -w[0] * z[0] - boundary * lam
    right_a, right_b = w[0], -w[0] * z[0] + boundary * lam

    for k in range(1, n):
        tm, a, b = _crossing_from_left(knots, left_a, left_b, -lam)
        knots.appendleft([tm, a, b + lam])
        left_a, left_b = 0.0, -lam

        tp, a, b = _crossing_from_right(knots, right_a, right_b, lam)
        knots.append([tp, -a, lam - b])
        right_a, right_b = 0.0, lam

        lower[k - 1], upper[k - 1] = tm, tp

        left_a += w[k]
        left_b -= w[k] * z[k]
        right_a += w[k]
        right_b -= w[k] * z[k]
        if k == n - 1:
            _insert_sorted(knots, [0.0, 0.0, 2.0 * lam])
            left_b -= lam
            right_b += lam

    v = np.empty(n)
    v[-1], _, _ = _crossing_from_left(knots, left_a, left_b, 0.0)
    for k in range(n - 2, -1, -1):
        v[k] = min(max(v[k + 1], lower[k]), upper[k])
    return v


class ProxService:
    @staticmethod
    def prox_fused_boundary(problem: ProxProblem, check: bool = False) -> np.ndarray:
        """
        Exact minimizer of
        1/2 sum w_t (v_t - z_t)^2 + lam (|v_1| + sum |v_t - v_t+1| + |v_n|).
        With check=True the subgradient optimality gap is verified.
        """
        if problem.n == 0:
            return np.empty(0)
        if problem.lam == 0:
            return problem.z.copy()

        v = _solve_chain(problem.z, problem.weights, problem.lam)

        if check:
            gap = ProxService.optimality_gap(problem, v)
            scale = 1.0 + problem.lam + float(np.abs(problem.weights * problem.z).sum())
            if gap > settings.PROX_CHECK_TOL * scale:
                logger.error(f"Prox optimality check failed: gap={gap:.3e}, n={problem.n}")
                raise NonConvergenceError(f"Prox solution failed its optimality check (gap={gap:.3e})")
        return v

    @staticmethod
    def optimality_gap(problem: ProxProblem, v) -> float:
        """
        Violation of 0 in the subdifferential at v (0 when optimal).

        With v_0 = v_n+1 = 0 and dual u_t in lam * d|v_t+1 - v_t|, stationarity
        fixes u_t = u_0 + sum_{s<=t} w_s (v_s - z_s); the gap is how far the
        intervals each u_t imposes on u_0 are from intersecting.
        """
        v = np.asarray(v, dtype=float).reshape(-1)
        if problem.n == 0:
            return 0.0
        lam = problem.lam
        jumps = np.diff(np.concatenate([[0.0], v, [0.0]]))
        offsets = np.concatenate([[0.0], np.cumsum(problem.weights * (v - problem.z))])
        zero_tol = 1e-12 * (1.0 + float(np.abs(v).max()))
        moving = np.abs(jumps) > zero_tol
        low = np.where(moving, lam * np.sign(jumps), -lam) - offsets
        high = np.where(moving, lam * np.sign(jumps), lam) - offsets
        return float(max(0.0, low.max() - high.min()))
