"""
SolverService.
TV-regularized empirical risk minimization over GAM predictors:

    sum_i loss(f(x_i), y_i) + lam * sum_j TV(f_j)

`fit` runs cyclic block coordinate descent (backfitting) with the exact
fused-lasso prox for each feature block; `fit_oracle_l1` minimizes the same
objective directly over the triangle basis for small instances and serves
as the reference solution.
"""
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple
import logging

import numpy as np
from scipy.optimize import linprog

from app.core.config import settings
from app.core.exceptions import (
    ConfigError,
    NonConvergenceError,
    OracleTooLargeError,
    UnsupportedLossError,
)
from app.models.dataset import Dataset
from app.models.gam import GamModel
from app.models.loss import LossKind, LossSpec
from app.models.step_function import ExtensionMode
from app.models.tv import ProxProblem, TriangleWeights
from app.schemas.fit import FitConfig, FitReport, StepRule
from app.services.gam import GamService
from app.services.prox import ProxService
from app.services.tv import TVService

logger = logging.getLogger(__name__)

# Oracle traces keep one entry every this many iterations.
ORACLE_TRACE_EVERY = 100

# Sufficient-decrease constant and halving budget for backtracking.
ARMIJO = 1e-4
MAX_BACKTRACKS = 60
# Hessian weights never drop below this fraction of the curvature bound.
CURVATURE_FLOOR = 1e-10


def _soft_threshold(x: np.ndarray, threshold: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


def _compact_tv(values: np.ndarray) -> float:
    if len(values) == 0:
        return 0.0
    return float(abs(values[0]) + np.abs(np.diff(values)).sum() + abs(values[-1]))


def _proximal_newton_block(fo, loss, y, prediction, values, sizes, lam, max_steps, tol):
    """
    Proximal Newton steps on the group values of one feature. The loss
    Hessian in these values is diagonal, so a step is a single weighted
    fused-lasso prox; backtracking makes every accepted step a descent step.
    Returns the new values and the updated prediction.
    """
    floor = CURVATURE_FLOOR * loss.curvature * sizes
    for _ in range(max_steps):
        gradient = fo.merge(loss.gradient(prediction, y))
        weights = np.maximum(fo.merge(loss.hessian(prediction, y)), floor)
        target = ProxService.prox_fused_boundary(
            ProxProblem(z=values - gradient / weights, weights=weights, lam=lam)
        )
        direction = target - values
        if np.max(np.abs(direction), initial=0.0) <= tol * (1.0 + np.max(np.abs(values), initial=0.0)):
            break
        penalty = _compact_tv(values)
        predicted = float(gradient @ direction) + lam * (_compact_tv(target) - penalty)
        if predicted >= 0.0:
            break
        current = float(np.sum(loss.value(prediction, y))) + lam * penalty
        step = 1.0
        for _ in range(MAX_BACKTRACKS):
            trial = values + step * direction
            trial_prediction = prediction + step * direction[fo.group_of]
            value = float(np.sum(loss.value(trial_prediction, y))) + lam * _compact_tv(trial)
            if value <= current + ARMIJO * step * predicted:
                break
            step *= 0.5
        else:
            break
        values, prediction = trial, trial_prediction
    return values, prediction


def _newton_intercept(loss, y, prediction, max_steps, tol):
    """Damped Newton steps on the unpenalized intercept; returns (shift, prediction)."""
    total = 0.0
    floor = CURVATURE_FLOOR * loss.curvature * len(y)
    for _ in range(max_steps):
        gradient = float(np.sum(loss.gradient(prediction, y)))
        shift = -gradient / max(float(np.sum(loss.hessian(prediction, y))), floor)
        if abs(shift) <= tol * (1.0 + abs(total)):
            break
        current = float(np.sum(loss.value(prediction, y)))
        step = 1.0
        for _ in range(MAX_BACKTRACKS):
            if float(np.sum(loss.value(prediction + step * shift, y))) <= current + ARMIJO * step * gradient * shift:
                break
            step *= 0.5
        else:
            break
        total += step * shift
        prediction = prediction + step * shift
    return total, prediction


@dataclass
class _OracleRun:
    coefficients: np.ndarray
    intercept: float
    objective: float
    iterations: int
    converged: bool
    trace: List[float] = field(default_factory=list)


@dataclass(frozen=True)
class _TriangleBasis:
    """Columns phi_{j,s,t} (times 2) for tie-group pairs s <= t of every feature."""
    matrix: np.ndarray
    blocks: Tuple[Tuple[int, np.ndarray, np.ndarray], ...]   # (offset, s, t) per feature

    @classmethod
    def build(cls, data: Dataset) -> "_TriangleBasis":
        sizes = [fo.n_groups * (fo.n_groups + 1) // 2 for fo in data.feature_orders]
        total = sum(sizes)
        cap = settings.ORACLE_BASIS_CAP
        if total > cap:
            logger.warning(f"Oracle refused: {total} basis functions > cap {cap}")
            raise OracleTooLargeError(basis_size=total, cap=cap, p=data.p, m=data.m)

        columns, blocks, offset = [], [], 0
        for fo, size in zip(data.feature_orders, sizes):
            s, t = np.triu_indices(fo.n_groups)
            g = fo.group_of[:, None]
            columns.append(((g >= s) & (g <= t)).astype(float))
            blocks.append((offset, s, t))
            offset += size
        matrix = np.hstack(columns) if columns else np.zeros((data.m, 0))
        return cls(matrix=matrix, blocks=tuple(blocks))

    def to_model(
        self,
        data: Dataset,
        coefficients: np.ndarray,
        intercept: float,
        extension_mode: ExtensionMode,
    ) -> GamModel:
        functions = []
        for fo, (offset, s, t) in zip(data.feature_orders, self.blocks):
            block = coefficients[offset:offset + len(s)]
            nonzero = np.flatnonzero(block)
            weights = TriangleWeights(
                entries={(int(s[k]), int(t[k])): float(block[k]) for k in nonzero}
            )
            f = TVService.w_to_step(weights, fo.values).compress()
            functions.append(f.with_mode(extension_mode))
        return GamModel(weight_functions=tuple(functions), intercept=intercept)


class SolverService:
    @staticmethod
    def objective(model: GamModel, data: Dataset, loss: LossSpec, lam: float) -> float:
        """sum_i loss(f(x_i), y_i) + lam * sum_j TV(f_j) with compact-mode TV."""
        if model.p != data.p:
            raise ConfigError(f"Model has p={model.p} but the dataset has p={data.p}")
        loss.validate_targets(data.targets)
        predictions = GamService.predict_many(model, data.features)
        return float(np.sum(loss.value(predictions, data.targets)) + lam * model.budget_used)

    @staticmethod
    def fit(data: Dataset, loss: LossSpec, config: FitConfig) -> Tuple[GamModel, FitReport]:
        """
        Backfitting from the all-zero model. Each block update solves the squared
        loss exactly with one fused-lasso prox, or takes proximal Newton steps
        in the per-group values of one feature. A cycle counts as converged
        once the objective stops decreasing and no block moves.
        Hinge and absolute losses are routed to the triangle-basis oracle.
        """
        SolverService._check_inputs(data, loss, config.lam)
        if not loss.is_smooth:
            return SolverService._fit_nonsmooth(data, loss, config)

        step_rule = config.step_rule or (
            StepRule.EXACT_PROX_FOR_SQUARED if loss.kind == LossKind.SQUARED
            else StepRule.PROXIMAL_GRADIENT_FOR_SMOOTH
        )
        if step_rule == StepRule.EXACT_PROX_FOR_SQUARED and loss.kind != LossKind.SQUARED:
            raise ConfigError(f"Step rule {step_rule.value} needs squared loss, got {loss.kind.value}")

        lam = config.lam
        y = data.targets
        orders = data.feature_orders
        sizes = [fo.group_sizes.astype(float) for fo in orders]
        values = [np.zeros(fo.n_groups) for fo in orders]
        contributions = np.zeros((data.p, data.m))
        intercept = 0.0
        prediction = np.zeros(data.m)

        def current_objective() -> float:
            penalty = sum(_compact_tv(v) for v in values)
            return float(np.sum(loss.value(prediction, y)) + lam * penalty)

        rng = np.random.default_rng(config.seed)
        trace = [current_objective()]
        converged = False
        iterations = 0
        logger.info(
            f"Fitting {loss.kind.value} loss, m={data.m}, p={data.p}, lambda={lam}, rule={step_rule.value}"
        )

        step_tol = config.tol
        for iterations in range(1, config.max_outer_iters + 1):
            blocks = rng.permutation(data.p) if config.shuffle_blocks else range(data.p)
            start = [v.copy() for v in values]
            change = 0.0
            for j in blocks:
                fo = orders[j]
                if step_rule == StepRule.EXACT_PROX_FOR_SQUARED:
                    residual = y - (prediction - contributions[j])
                    problem = ProxProblem(
                        z=fo.merge(residual) / sizes[j], weights=2.0 * sizes[j], lam=lam
                    )
                    values[j] = ProxService.prox_fused_boundary(problem)
                    updated = values[j][fo.group_of]
                    prediction += updated - contributions[j]
                    contributions[j] = updated
                else:
                    values[j], prediction = _proximal_newton_block(
                        fo, loss, y, prediction, values[j], sizes[j], lam, config.inner_iters, step_tol
                    )
                    contributions[j] = values[j][fo.group_of]
                change = max(change, float(np.max(np.abs(values[j] - start[j]), initial=0.0)))

            if config.intercept:
                if loss.kind == LossKind.SQUARED and step_rule == StepRule.EXACT_PROX_FOR_SQUARED:
                    shift = float(np.mean(y - prediction))
                    prediction += shift
                else:
                    shift, prediction = _newton_intercept(loss, y, prediction, config.inner_iters, step_tol)
                intercept += shift
                change = max(change, abs(shift))

            previous, current = trace[-1], current_objective()
            trace.append(current)
            logger.debug(f"Cycle {iterations}: objective={current:.12g}, largest block change={change:.3g}")
            # stationary: no block moved and the objective stopped decreasing
            scale = 1.0 + float(np.max(np.abs(prediction), initial=0.0))
            if previous - current <= config.tol * abs(previous) and change <= np.sqrt(config.tol) * scale:
                converged = True
                break

        functions = tuple(
            TVService.min_tv_interpolant(fo.values, v).compress().with_mode(config.extension_mode)
            for fo, v in zip(orders, values)
        )
        model = GamModel(weight_functions=functions, intercept=intercept)
        if not converged:
            logger.warning(f"Backfitting stopped at max_outer_iters={config.max_outer_iters} without converging")
        logger.info(f"Fit finished after {iterations} cycles, objective={trace[-1]:.12g}")

        report = FitReport(
            lam=lam,
            loss=loss.kind.value,
            solver=f"backfitting:{step_rule.value}",
            objective_trace=trace,
            final_objective=trace[-1],
            iterations=iterations,
            converged=converged,
            budget_used=model.budget_used,
        )
        return model, report

    @staticmethod
    def fit_oracle_l1(
        data: Dataset,
        loss: LossSpec,
        lam: float,
        intercept: bool = False,
        extension_mode: ExtensionMode = ExtensionMode.CLAMP,
    ) -> Tuple[GamModel, float]:
        """
        Minimize sum_i loss(sum 2 w phi (x_i), y_i) + 2 lam sum |w| over the
        triangle basis phi_{j,s,t} = 1/2 [x_(s) <= x_j < x_(t+1)], s <= t.
        Returns the assembled model and the optimal objective value.
        """
        SolverService._check_inputs(data, loss, lam)
        basis = _TriangleBasis.build(data)
        run = SolverService._run_oracle(basis, data, loss, lam, intercept)
        model = basis.to_model(data, run.coefficients, run.intercept, extension_mode)
        return model, run.objective

    @staticmethod
    def fit_path(
        data: Dataset,
        loss: LossSpec,
        config: FitConfig,
        lambdas: Sequence[float],
    ) -> List[Tuple[GamModel, FitReport]]:
        """Independent fits from the zero model, one per lambda, in the given order."""
        if len(lambdas) == 0:
            raise ConfigError("Lambda grid is empty")
        return [
            SolverService.fit(data, loss, config.model_copy(update={"lam": float(lam)}))
            for lam in lambdas
        ]

    @staticmethod
    def lp_reference(data: Dataset, loss: LossSpec, lam: float, intercept: bool = False) -> float:
        """
        Optimal objective of the triangle-basis problem for hinge or absolute
        loss, solved as a linear program (HiGHS). Reference value for the
        subgradient oracle on small instances.
        """
        SolverService._check_inputs(data, loss, lam)
        if loss.kind not in (LossKind.HINGE, LossKind.ABSOLUTE):
            raise UnsupportedLossError(f"The LP reference covers hinge and absolute loss, not {loss.kind.value}")
        phi = _TriangleBasis.build(data).matrix
        m, n = phi.shape
        y = data.targets
        ones = np.ones((m, 1)) if intercept else np.zeros((m, 0))
        slack = np.eye(m)

        # variables: w+ (n), w- (n), b (0 or 1), s (m)
        cost = np.concatenate([np.full(2 * n, 2.0 * lam), np.zeros(ones.shape[1]), np.ones(m)])
        if loss.kind == LossKind.ABSOLUTE:
            rows = np.vstack([
                np.hstack([phi, -phi, ones, -slack]),
                np.hstack([-phi, phi, -ones, -slack]),
            ])
            rhs = np.concatenate([y, -y])
        else:
            margin = y[:, None] * np.hstack([phi, -phi, ones])
            rows = np.hstack([-margin, -slack])
            rhs = -np.ones(m)
        bounds = [(0, None)] * (2 * n) + [(None, None)] * ones.shape[1] + [(0, None)] * m
        result = linprog(cost, A_ub=rows, b_ub=rhs, bounds=bounds, method="highs")
        if result.status != 0:
            raise NonConvergenceError(f"LP reference failed: {result.message}")
        return float(result.fun)

    @staticmethod
    def _check_inputs(data: Dataset, loss: LossSpec, lam: float) -> None:
        if not np.isfinite(lam) or lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {lam}")
        if not loss.is_convex:
            raise UnsupportedLossError(
                f"Clipped {loss.kind.value} loss is non-convex and cannot be fitted"
            )
        loss.validate_targets(data.targets)

    @staticmethod
    def _fit_nonsmooth(data: Dataset, loss: LossSpec, config: FitConfig) -> Tuple[GamModel, FitReport]:
        if config.step_rule is not None:
            raise ConfigError(f"Step rules apply to smooth losses only, not {loss.kind.value}")
        logger.info(f"Routing {loss.kind.value} loss to the triangle-basis oracle")
        basis = _TriangleBasis.build(data)
        run = SolverService._run_oracle(basis, data, loss, config.lam, config.intercept)
        model = basis.to_model(data, run.coefficients, run.intercept, config.extension_mode)
        final = SolverService.objective(model, data, loss, config.lam)
        report = FitReport(
            lam=config.lam,
            loss=loss.kind.value,
            solver="oracle:proximal_subgradient",
            objective_trace=run.trace,
            final_objective=final,
            iterations=run.iterations,
            converged=run.converged,
            budget_used=model.budget_used,
        )
        return model, report

    @staticmethod
    def _run_oracle(
        basis: _TriangleBasis,
        data: Dataset,
        loss: LossSpec,
        lam: float,
        intercept: bool,
    ) -> _OracleRun:
        phi = basis.matrix
        y = data.targets
        design = np.hstack([phi, np.ones((data.m, 1))]) if intercept else phi
        norm_sq = float(np.linalg.norm(design, 2) ** 2) if design.size else 0.0
        n = phi.shape[1]

        def objective(w: np.ndarray, b: float) -> float:
            return float(np.sum(loss.value(phi @ w + b, y)) + 2.0 * lam * np.abs(w).sum())

        if norm_sq == 0.0:
            return _OracleRun(np.zeros(n), 0.0, objective(np.zeros(n), 0.0), 0, True)
        if loss.is_smooth:
            return SolverService._oracle_mfista(phi, y, loss, lam, intercept, loss.curvature * norm_sq, objective)
        return SolverService._oracle_subgradient(phi, y, loss, lam, intercept, 1.0 / norm_sq, objective)

    @staticmethod
    def _oracle_mfista(phi, y, loss, lam, intercept, lipschitz, objective) -> _OracleRun:
        """Monotone FISTA with soft-thresholding; the intercept is unpenalized."""
        n = phi.shape[1]
        tol = settings.ORACLE_TOL
        x_w, x_b = np.zeros(n), 0.0
        prev_w, prev_b = x_w, x_b
        y_w, y_b = x_w, x_b
        t = 1.0
        best = objective(x_w, x_b)
        trace = [best]
        converged = False
        k = 0
        for k in range(1, settings.ORACLE_MAX_ITERS + 1):
            gradient = loss.gradient(phi @ y_w + y_b, y)
            z_w = _soft_threshold(y_w - phi.T @ gradient / lipschitz, 2.0 * lam / lipschitz)
            z_b = y_b - float(gradient.sum()) / lipschitz if intercept else 0.0
            candidate = objective(z_w, z_b)

            accepted = candidate <= best
            prev_w, prev_b = x_w, x_b
            decrease = 0.0
            if accepted:
                decrease = best - candidate
                x_w, x_b, best = z_w, z_b, candidate

            t_next = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
            y_w = x_w + (t / t_next) * (z_w - x_w) + ((t - 1.0) / t_next) * (x_w - prev_w)
            y_b = x_b + (t / t_next) * (z_b - x_b) + ((t - 1.0) / t_next) * (x_b - prev_b)
            t = t_next

            if k % ORACLE_TRACE_EVERY == 0:
                trace.append(best)
            step = float(np.linalg.norm(x_w - prev_w)) + abs(x_b - prev_b)
            if accepted and decrease <= tol * (1.0 + abs(best)) and step <= np.sqrt(tol) * (1.0 + float(np.linalg.norm(x_w))):
                converged = True
                break

        if trace[-1] != best:
            trace.append(best)
        if not converged:
            logger.warning(f"Oracle stopped at {k} iterations without meeting tol={tol}")
        return _OracleRun(x_w, x_b, best, k, converged, trace)

    @staticmethod
    def _oracle_subgradient(phi, y, loss, lam, intercept, step0, objective) -> _OracleRun:
        """Proximal subgradient steps with step0 / sqrt(k+1); the best iterate is kept."""
        n = phi.shape[1]
        iters = settings.ORACLE_SUBGRADIENT_ITERS
        w, b = np.zeros(n), 0.0
        best_w, best_b, best = w, b, objective(w, b)
        trace = [best]
        checkpoint = best
        # stalled: the best objective barely moved over the last tenth of the schedule
        window = max(1, iters // 10)
        converged = False
        for k in range(iters):
            step = step0 / np.sqrt(k + 1.0)
            gradient = loss.gradient(phi @ w + b, y)
            w = _soft_threshold(w - step * (phi.T @ gradient), 2.0 * lam * step)
            if intercept:
                b = b - step * float(gradient.sum())
            current = objective(w, b)
            if current < best:
                best_w, best_b, best = w.copy(), b, current
            if (k + 1) % ORACLE_TRACE_EVERY == 0:
                trace.append(best)
            if (k + 1) % window == 0:
                converged = checkpoint - best <= 1e-6 * (1.0 + abs(best))
                checkpoint = best
        if trace[-1] != best:
            trace.append(best)
        return _OracleRun(best_w, best_b, best, iters, converged, trace)
