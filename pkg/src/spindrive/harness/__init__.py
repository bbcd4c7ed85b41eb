"""CLI orchestration: dataset generation, training, evaluation, benchmarks."""
from .bench import BenchReport, run_bench, write_bench_artifacts
from .configs import build_integrator, build_model, load_config, validate_config
from .evaluate import (
    BaselineReport,
    ClassResult,
    EvalReport,
    EvalSuite,
    compare_with_closure,
    evaluate_checkpoint,
    generate_suite,
    per_observable_rmse,
    physicality_rate,
    read_predictions,
    rmse_curve,
    rmse_from_dump,
    write_predictions,
    write_report_artifacts,
)
from .svg import line_chart

__all__ = [
    "BaselineReport",
    "BenchReport",
    "ClassResult",
    "EvalReport",
    "EvalSuite",
    "build_integrator",
    "build_model",
    "compare_with_closure",
    "evaluate_checkpoint",
    "generate_suite",
    "line_chart",
    "load_config",
    "per_observable_rmse",
    "physicality_rate",
    "read_predictions",
    "rmse_curve",
    "rmse_from_dump",
    "run_bench",
    "validate_config",
    "write_bench_artifacts",
    "write_predictions",
    "write_report_artifacts",
]
