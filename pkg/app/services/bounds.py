"""
BoundsService.
Finite-sample generalization certificates for TV-bounded GAMs with a
rho-Lipschitz loss bounded by c:

    uniform deviation  <= rho C sqrt(5 ceil(ln p) / m) +   c sqrt(2 ln(2/delta) / m)
    ERM excess risk    <= rho C sqrt(5 ceil(ln p) / m) + 5 c sqrt(2 ln(2/delta) / m)

plus the realized train/test gap of fitted models and a seeded Monte-Carlo
check that the certificate covers it.
"""
from typing import Optional, Sequence
import logging
import math

import numpy as np

from app.core.exceptions import ConfigError, UnboundedLossError
from app.models.dataset import Dataset
from app.models.gam import GamModel
from app.models.loss import LossKind, LossSpec
from app.schemas.bounds import (
    Certificate,
    CertificateComponents,
    CertificateInputs,
    CertificateKind,
    CertificateValidation,
    DeviationReport,
)
from app.schemas.fit import FitConfig
from app.services.complexity import ComplexityService, draw_generator
from app.services.gam import GamService
from app.services.solver import SolverService

logger = logging.getLogger(__name__)

CONFIDENCE_FACTOR = {CertificateKind.UNIFORM_DEVIATION: 1.0, CertificateKind.ERM_EXCESS: 5.0}

VALIDATION_STREAM = 2
VALIDATION_NOISE = 0.1
VALIDATION_CLIP = 2.0


def _certificate(kind: CertificateKind, p: int, m: int, C: float, rho: float, c: float, delta: float) -> Certificate:
    complexity = rho * C * math.sqrt(5 * math.ceil(math.log(p)) / m)
    confidence = CONFIDENCE_FACTOR[kind] * c * math.sqrt(2 * math.log(2 / delta) / m)
    return Certificate(
        kind=kind,
        value=complexity + confidence,
        delta=delta,
        components=CertificateComponents(complexity=complexity, confidence=confidence),
        inputs=CertificateInputs(p=p, m=m, C=C, rho=rho, c=c, delta=delta),
    )


def _check(p: int, m: int, C: float, rho: Optional[float], c: Optional[float], delta: float) -> None:
    if rho is None:
        raise UnboundedLossError(
            "The loss has no finite Lipschitz constant; declare prediction and target ranges"
        )
    if c is None:
        raise UnboundedLossError(
            "The loss is unbounded; declare prediction (and target) ranges or clip it"
        )
    if p <= 2:
        raise ConfigError(f"Certificates are proven for p > 2 only, got p={p}")
    if m < 1:
        raise ConfigError(f"m must be >= 1, got {m}")
    if not (math.isfinite(C) and C > 0):
        raise ConfigError(f"C must be > 0, got {C}")
    if not (math.isfinite(rho) and rho > 0):
        raise ConfigError(f"rho must be > 0, got {rho}")
    if not (math.isfinite(c) and c >= 0):
        raise ConfigError(f"c must be >= 0, got {c}")
    if not 0 < delta < 1:
        raise ConfigError(f"delta must lie in (0, 1), got {delta}")


class BoundsService:
    @staticmethod
    def uniform_deviation_bound(
        p: int, m: int, C: float, rho: Optional[float], c: Optional[float], delta: float
    ) -> Certificate:
        _check(p, m, C, rho, c, delta)
        return _certificate(CertificateKind.UNIFORM_DEVIATION, p, m, C, rho, c, delta)

    @staticmethod
    def erm_excess_bound(
        p: int, m: int, C: float, rho: Optional[float], c: Optional[float], delta: float
    ) -> Certificate:
        """Additive excess of the ERM risk over the best risk in GAM_p(C)."""
        _check(p, m, C, rho, c, delta)
        return _certificate(CertificateKind.ERM_EXCESS, p, m, C, rho, c, delta)

    @staticmethod
    def certify(
        kind: CertificateKind, p: int, m: int, C: float, loss: LossSpec, delta: float
    ) -> Certificate:
        """Certificate with rho and c taken from a LossSpec."""
        kind = CertificateKind(kind)
        certificate = (
            BoundsService.uniform_deviation_bound if kind == CertificateKind.UNIFORM_DEVIATION
            else BoundsService.erm_excess_bound
        )(p, m, C, loss.lipschitz, loss.bound, delta)
        logger.info(f"Issued {kind.value} certificate {certificate.value:.6g} (p={p}, m={m}, C={C}, delta={delta})")
        return certificate

    @staticmethod
    def empirical_deviation(
        models: Sequence[GamModel],
        train: Dataset,
        test: Dataset,
        loss: LossSpec,
        delta: Optional[float] = None,
    ) -> DeviationReport:
        """
        max over the models of (test risk - train risk). With `delta`, the
        uniform-deviation certificate for the smallest C covering every
        model's budget is attached.
        """
        if len(models) == 0:
            raise ConfigError("Model sweep is empty")
        if train.p != test.p:
            raise ConfigError(f"Train has p={train.p} but test has p={test.p}")
        gaps = [GamService.risk(f, test, loss) - GamService.risk(f, train, loss) for f in models]
        covering = max(f.budget_used for f in models)

        certificate = None
        if delta is not None:
            if covering > 0:
                certificate = BoundsService.certify(
                    CertificateKind.UNIFORM_DEVIATION, train.p, train.m, covering, loss, delta
                )
            else:
                logger.warning("Every model is zero; no complexity budget to certify")
        return DeviationReport(gap=max(gaps), gaps=gaps, covering_C=covering, certificate=certificate)

    @staticmethod
    def validate_certificate(
        trials: int,
        m: int,
        p: int,
        lambdas: Sequence[float],
        delta: float,
        seed: int,
        test_size: Optional[int] = None,
    ) -> CertificateValidation:
        """
        Seeded synthetic experiment: features U[0, 1)^p, labels sign(x_1 - 1/2)
        flipped with probability 0.1, logistic fits over `lambdas`, evaluated
        with hinge loss clipped at 2. Counts the trials whose realized gap is
        within the uniform-deviation certificate.
        """
        if trials < 1:
            raise ConfigError(f"trials must be >= 1, got {trials}")
        if not lambdas:
            raise ConfigError("Lambda grid is empty")
        test_size = test_size or 10 * m
        fit_loss = LossSpec(kind=LossKind.LOGISTIC)
        eval_loss = LossSpec(kind=LossKind.HINGE, clip=VALIDATION_CLIP)
        config = FitConfig(lam=lambdas[0], tol=1e-6, max_outer_iters=500)

        covered, values, gaps = 0, [], []
        for trial in range(trials):
            rng = draw_generator(seed, VALIDATION_STREAM, trial)
            train, test = (
                BoundsService._synthetic_dataset(rng, size, p) for size in (m, test_size)
            )
            models = [model for model, _ in SolverService.fit_path(train, fit_loss, config, lambdas)]
            report = BoundsService.empirical_deviation(models, train, test, eval_loss)
            if report.covering_C > 0:
                value = BoundsService.certify(
                    CertificateKind.UNIFORM_DEVIATION, p, m, report.covering_C, eval_loss, delta
                ).value
            else:
                value = VALIDATION_CLIP * math.sqrt(2 * math.log(2 / delta) / m)
            values.append(value)
            gaps.append(report.gap)
            covered += report.gap <= value

        logger.info(f"Certificate covered {covered}/{trials} trials at delta={delta}")
        return CertificateValidation(
            trials=trials,
            covered=covered,
            coverage=covered / trials,
            delta=delta,
            certificate_values=values,
            realized_gaps=gaps,
        )

    @staticmethod
    def _synthetic_dataset(rng: np.random.Generator, size: int, p: int) -> Dataset:
        features = ComplexityService.sample_features("uniform", size, p, rng)
        labels = np.where(features[:, 0] >= 0.5, 1.0, -1.0)
        flips = rng.random(size) < VALIDATION_NOISE
        return GamService.build_dataset(features, np.where(flips, -labels, labels))
