"""
Command-line surface.

    python -m app fit --input train.csv --target y --loss squared --lambda 0.1 --seed 0 --out model.json
    python -m app predict --model model.json --input test.csv --out predictions.csv
    python -m app complexity --p 8 --m 1000 --C 1 --draws 10000 --seed 0

Exit codes: 0 success, 2 configuration error, 3 data error,
4 non-convergence, 5 bound violation.
"""
from pathlib import Path
from typing import List, Optional, Sequence
import argparse
import logging
import sys

import numpy as np
import pandas as pd
from pydantic import BaseModel, TypeAdapter, ValidationError

from app.core.config import settings
from app.core.exceptions import (
    BoundViolationError,
    ConfigError,
    GamError,
    NonConvergenceError,
    UnboundedLossError,
)
from app.core.logging import configure_logging
from app.models.loss import LossKind, LossSpec
from app.models.step_function import ExtensionMode
from app.schemas.bounds import CertificateKind
from app.schemas.complexity import BoundInputs, BoundReport, ComplexityKind, FeatureDistribution, ScalingRow
from app.schemas.evaluation import EvaluationReport, ModelEvaluation
from app.schemas.fit import FitConfig, StepRule
from app.schemas.model_file import FitMetadata
from app.schemas.run import RunConfig
from app.services.bounds import BoundsService
from app.services.complexity import DATA_STREAM, ComplexityService, draw_generator
from app.services.gam import GamService
from app.services.ingest import IngestService
from app.services.persistence import ModelFileService
from app.services.solver import SolverService

logger = logging.getLogger(__name__)


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _emit_json(document: BaseModel, out: Optional[Path]) -> None:
    _emit(document.model_dump_json(indent=2) + "\n", out)


def _loss_spec(args) -> LossSpec:
    return LossSpec(
        kind=args.loss,
        prediction_range=getattr(args, "prediction_range", None),
        target_range=getattr(args, "target_range", None),
        clip=getattr(args, "clip", None),
    )


def _suffixed(out: Path, index: int, count: int) -> Path:
    if count == 1:
        return out
    return out.with_name(f"{out.stem}.lambda{index}{out.suffix}")


def _features_only(args):
    """Dataset from --input (targets ignored) or synthetic features from --p/--m."""
    if args.input is not None:
        if args.target is not None:
            data = IngestService.ingest_csv(args.input, args.target)
            return GamService.build_dataset(data.features, np.zeros(data.m), data.feature_names)
        features = IngestService.read_features(args.input)
        return GamService.build_dataset(features, np.zeros(len(features)))
    if args.p is None or args.m is None:
        raise ConfigError("Either --input or both --p and --m are required")
    rng = draw_generator(args.seed, DATA_STREAM, args.p, args.m)
    features = ComplexityService.sample_features(args.distribution, args.m, args.p, rng)
    return GamService.build_dataset(features, np.zeros(args.m))


def cmd_fit(args) -> int:
    run = RunConfig(
        input=args.input, target=args.target, loss=args.loss, lambdas=args.lambdas,
        seed=args.seed, out=args.out, intercept=args.intercept, extension=args.extension,
    )
    data = IngestService.ingest_csv(run.input, run.target)
    loss = _loss_spec(args)
    config = FitConfig(
        lam=run.lambdas[0],
        seed=run.seed,
        intercept=run.intercept,
        extension_mode=run.extension,
        step_rule=args.step_rule,
        shuffle_blocks=args.shuffle_blocks,
        max_outer_iters=args.max_outer_iters or settings.FIT_MAX_OUTER_ITERS,
        tol=args.tol or settings.FIT_TOL,
    )
    results = SolverService.fit_path(data, loss, config, run.lambdas)

    report_path = Path(args.report) if args.report else run.out.with_name(run.out.name + ".report.jsonl")
    lines = []
    for index, (model, report) in enumerate(results):
        metadata = FitMetadata(
            lam=report.lam,
            loss=report.loss,
            seed=run.seed,
            objective=report.final_objective,
            solver=report.solver,
            converged=report.converged,
        )
        ModelFileService.save(model, _suffixed(run.out, index, len(results)), metadata, data.feature_names)
        lines.append(report.model_dump_json())
    report_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    failed = [report.lam for _, report in results if not report.converged]
    if failed:
        raise NonConvergenceError(f"Fit did not converge for lambda in {failed}")
    return 0


def cmd_predict(args) -> int:
    model, document = ModelFileService.load(args.model)
    if args.extension is not None:
        model = model.with_mode(args.extension)
    features = IngestService.read_features(args.input, document.feature_names, args.target)
    predictions = GamService.predict_many(model, features)
    frame = pd.DataFrame({"prediction": predictions})
    _emit(frame.to_csv(index=False, float_format="%.17g", lineterminator="\n"), args.out)
    return 0


def cmd_evaluate(args) -> int:
    loss = _loss_spec(args)
    train = IngestService.ingest_csv(args.input, args.target)
    test = IngestService.ingest_csv(args.test, args.target) if args.test else None

    rows, models = [], []
    for path in args.model:
        model, document = ModelFileService.load(path)
        lam = args.lam if args.lam is not None else (document.fit.lam or 0.0)
        rows.append(ModelEvaluation(
            model=str(path),
            lam=lam,
            objective=SolverService.objective(model, train, loss, lam),
            train_risk=GamService.risk(model, train, loss),
            test_risk=GamService.risk(model, test, loss) if test is not None else None,
            budget_used=model.budget_used,
        ))
        models.append(model)

    deviation = None
    if test is not None:
        deviation = BoundsService.empirical_deviation(models, train, test, loss, args.delta)
    _emit_json(EvaluationReport(models=rows, deviation=deviation), args.out)
    return 0


def cmd_complexity(args) -> int:
    data = _features_only(args)
    report = ComplexityService.estimate_complexity(data, args.C, args.kind, args.draws, args.seed)
    _emit_json(report, args.out)
    if not report.within_bound(settings.MC_SIGMAS):
        raise BoundViolationError(
            f"Estimate {report.estimate:.6g} exceeds the bound {report.bound:.6g} "
            f"by more than {settings.MC_SIGMAS} standard errors"
        )
    return 0


def cmd_bound(args) -> int:
    inputs = BoundInputs(p=args.p, m=args.m, C=args.C, rho=args.rho)
    value = ComplexityService.theorem_bound(inputs, args.kind)
    _emit_json(BoundReport(**inputs.model_dump(), kind=args.kind, bound=value), args.out)
    return 0


def cmd_certify(args) -> int:
    if args.rho is None or args.c is None:
        if args.loss is None:
            raise UnboundedLossError("Pass --rho and --c, or --loss with its prediction and target ranges")
    if args.rho is not None and args.c is not None:
        certify = (
            BoundsService.uniform_deviation_bound if args.kind == CertificateKind.UNIFORM_DEVIATION
            else BoundsService.erm_excess_bound
        )
        certificate = certify(args.p, args.m, args.C, args.rho, args.c, args.delta)
    else:
        certificate = BoundsService.certify(args.kind, args.p, args.m, args.C, _loss_spec(args), args.delta)
    _emit_json(certificate, args.out)
    return 0


def cmd_tightness(args) -> int:
    report = ComplexityService.tightness_experiment(args.p, args.m, args.draws, args.seed)
    _emit_json(report, args.out)
    if args.table:
        pd.DataFrame([report.model_dump()]).to_csv(args.table, index=False, lineterminator="\n")
    return 0


def cmd_scaling(args) -> int:
    rows = ComplexityService.scaling_experiment(
        args.p_grid, args.m_grid, args.C, args.draws, args.seed, args.distribution, args.kind
    )
    table = pd.DataFrame([row.model_dump(mode="json") for row in rows])
    _emit(table.to_csv(index=False, lineterminator="\n"), args.out)
    if args.json:
        Path(args.json).write_bytes(TypeAdapter(List[ScalingRow]).dump_json(rows, indent=2) + b"\n")
    violations = [(row.p, row.m) for row in rows if not row.within_bound]
    if violations:
        raise BoundViolationError(f"Estimates exceed the bound at (p, m) = {violations}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("app.main:app", host=args.host, port=args.port, log_level=args.log_level.lower())
    return 0


def _choices(enum_cls) -> dict:
    return dict(choices=[member.value for member in enum_cls])


def _pair(flag: str):
    return dict(type=float, nargs=2, metavar=("LO", "HI"), default=None, help=f"{flag} box [LO, HI]")


def _add_loss_arguments(parser: argparse.ArgumentParser, default: Optional[str] = "squared") -> None:
    parser.add_argument("--loss", **_choices(LossKind), default=default)
    parser.add_argument("--prediction-range", dest="prediction_range", **_pair("Prediction"))
    parser.add_argument("--target-range", dest="target_range", **_pair("Target"))
    parser.add_argument("--clip", type=float, default=None, help="Cap on the loss value")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tvgam", description="TV-regularized GAMs: fitting, complexity and certificates")
    parser.add_argument("--log-level", dest="log_level", default=settings.LOG_LEVEL)
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_fit = sub.add_parser("fit", help="Fit a model (or one per lambda) and write model files")
    p_fit.add_argument("--input", type=Path, required=True)
    p_fit.add_argument("--target", required=True)
    _add_loss_arguments(p_fit)
    p_fit.add_argument("--lambda", dest="lambdas", type=float, nargs="+", required=True, help="One value or a grid")
    p_fit.add_argument("--seed", type=int, required=True)
    p_fit.add_argument("--intercept", action="store_true")
    p_fit.add_argument("--extension", **_choices(ExtensionMode), default=ExtensionMode.CLAMP.value)
    p_fit.add_argument("--step-rule", dest="step_rule", **_choices(StepRule), default=None)
    p_fit.add_argument("--shuffle-blocks", dest="shuffle_blocks", action="store_true")
    p_fit.add_argument("--max-outer-iters", dest="max_outer_iters", type=int, default=None)
    p_fit.add_argument("--tol", type=float, default=None)
    p_fit.add_argument("--out", type=Path, required=True, help="Model file; grids get .lambda<i> suffixes")
    p_fit.add_argument("--report", default=None, help="JSON-lines fit report (default: <out>.report.jsonl)")
    p_fit.set_defaults(func=cmd_fit)

    p_pred = sub.add_parser("predict", help="Predict every row of a CSV file")
    p_pred.add_argument("--model", type=Path, required=True)
    p_pred.add_argument("--input", type=Path, required=True)
    p_pred.add_argument("--target", default=None, help="Column to ignore when the model has no feature names")
    p_pred.add_argument("--extension", **_choices(ExtensionMode), default=None)
    p_pred.add_argument("--out", type=Path, default=None)
    p_pred.set_defaults(func=cmd_predict)

    p_eval = sub.add_parser("evaluate", help="Objective, risks and train/test gap of model files")
    p_eval.add_argument("--model", type=Path, nargs="+", required=True)
    p_eval.add_argument("--input", type=Path, required=True)
    p_eval.add_argument("--test", type=Path, default=None)
    p_eval.add_argument("--target", required=True)
    _add_loss_arguments(p_eval)
    p_eval.add_argument("--lambda", dest="lam", type=float, default=None)
    p_eval.add_argument("--delta", type=float, default=None, help="Attach a certificate at this confidence")
    p_eval.add_argument("--out", type=Path, default=None)
    p_eval.set_defaults(func=cmd_evaluate)

    p_cx = sub.add_parser("complexity", help="Monte-Carlo complexity estimate with its bound")
    p_cx.add_argument("--input", type=Path, default=None)
    p_cx.add_argument("--target", default=None, help="Column to exclude from the features")
    p_cx.add_argument("--p", type=int, default=None)
    p_cx.add_argument("--m", type=int, default=None)
    p_cx.add_argument("--distribution", **_choices(FeatureDistribution), default=FeatureDistribution.UNIFORM.value)
    p_cx.add_argument("--C", type=float, default=1.0)
    p_cx.add_argument("--kind", **_choices(ComplexityKind), default=ComplexityKind.RADEMACHER.value)
    p_cx.add_argument("--draws", type=int, default=settings.DEFAULT_DRAWS)
    p_cx.add_argument("--seed", type=int, required=True)
    p_cx.add_argument("--out", type=Path, default=None)
    p_cx.set_defaults(func=cmd_complexity)

    p_bound = sub.add_parser("bound", help="Closed-form complexity bound")
    p_bound.add_argument("--p", type=int, required=True)
    p_bound.add_argument("--m", type=int, required=True)
    p_bound.add_argument("--C", type=float, default=1.0)
    p_bound.add_argument("--rho", type=float, default=1.0)
    p_bound.add_argument("--kind", **_choices(ComplexityKind), default=ComplexityKind.RADEMACHER.value)
    p_bound.add_argument("--out", type=Path, default=None)
    p_bound.set_defaults(func=cmd_bound)

    p_cert = sub.add_parser("certify", help="Generalization certificate")
    p_cert.add_argument("--p", type=int, required=True)
    p_cert.add_argument("--m", type=int, required=True)
    p_cert.add_argument("--C", type=float, required=True)
    p_cert.add_argument("--rho", type=float, default=None)
    p_cert.add_argument("--c", type=float, default=None)
    p_cert.add_argument("--delta", type=float, default=0.05)
    p_cert.add_argument("--kind", **_choices(CertificateKind), default=CertificateKind.UNIFORM_DEVIATION.value)
    _add_loss_arguments(p_cert, default=None)
    p_cert.add_argument("--out", type=Path, default=None)
    p_cert.set_defaults(func=cmd_certify)

    p_tight = sub.add_parser("tightness", help="R(J_p) against R(GAM_p(2)) and R(GAM_p(4)) on sign-cube data")
    p_tight.add_argument("--p", type=int, required=True)
    p_tight.add_argument("--m", type=int, required=True)
    p_tight.add_argument("--draws", type=int, default=settings.DEFAULT_DRAWS)
    p_tight.add_argument("--seed", type=int, required=True)
    p_tight.add_argument("--out", type=Path, default=None)
    p_tight.add_argument("--table", type=Path, default=None, help="CSV copy of the report")
    p_tight.set_defaults(func=cmd_tightness)

    p_scale = sub.add_parser("scaling", help="Complexity estimates over a (p, m) grid")
    p_scale.add_argument("--p", dest="p_grid", type=int, nargs="+", required=True)
    p_scale.add_argument("--m", dest="m_grid", type=int, nargs="+", required=True)
    p_scale.add_argument("--C", type=float, default=1.0)
    p_scale.add_argument("--distribution", default=FeatureDistribution.UNIFORM.value)
    p_scale.add_argument("--kind", **_choices(ComplexityKind), default=ComplexityKind.RADEMACHER.value)
    p_scale.add_argument("--draws", type=int, default=settings.DEFAULT_DRAWS)
    p_scale.add_argument("--seed", type=int, required=True)
    p_scale.add_argument("--out", type=Path, default=None, help="CSV table")
    p_scale.add_argument("--json", type=Path, default=None)
    p_scale.set_defaults(func=cmd_scaling)

    p_serve = sub.add_parser("serve", help="Run the HTTP API")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.func(args)
    except GamError as e:
        logger.error(str(e))
        return e.exit_code
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
