import argparse
import json
import logging
import math
import os
import pathlib
import sys
import time

from dotenv import load_dotenv

load_dotenv()

from src.analysis import (
    EmptyHistoryError,
    ForestParams,
    MdsParams,
    ReportParams,
    SpaceMismatchError,
    build_report,
    write_report,
)
from src.design_space import DesignSpaceError, default_configuration, load_space
from src.optimizer import (
    BOHB,
    ConfigurationError,
    ObjectiveError,
    default_config_seed,
)
from src.run_history import (
    HistoryWriter,
    NoMaxBudgetRecordError,
    SchemaViolationError,
    SpaceDigestMismatchError,
    UnknownBudgetError,
    load_history,
)

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_OBJECTIVE_FAILED = 3
EXIT_INTERRUPTED = 130

LOG_LEVELS = {"error": "ERROR", "warning": "WARNING", "info": "INFO", "debug": "DEBUG"}
DEFAULT_LOG_LEVEL = os.getenv("BOAH_LOG", "info").lower()


def configure_logging(log_level: str):
    """Configure logging with the specified level."""
    logging.basicConfig(
        level=getattr(logging, LOG_LEVELS.get(log_level.lower(), "INFO")),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        force=True,
    )
    return logging.getLogger(__name__)


def _fail(message: str, code: int = EXIT_INPUT_ERROR) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _write_json(path: pathlib.Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, allow_nan=False) + "\n")


def _finite_or_none(value):
    return value if value is not None and math.isfinite(value) else None


def _summary(optimizer: BOHB, default_loss, elapsed: float, status: str) -> dict:
    history = optimizer.history
    try:
        best = history.incumbent()
    except NoMaxBudgetRecordError:
        best = None
    brackets = optimizer.scheduler.brackets
    return {
        "status": status,
        "best_config_id": best.config_id if best else None,
        "best_config": best.config.to_dict() if best else None,
        "best_loss": best.loss if best else None,
        "default_loss": _finite_or_none(default_loss),
        "n_trials": len(history),
        "n_failed": len(history.failed()),
        "budget_consumed": sum(r.budget for r in history.records),
        "brackets_started": len(brackets),
        "brackets_completed": sum(1 for b in brackets if b.finished and not b.truncated),
        "brackets_truncated": sum(1 for b in brackets if b.truncated),
        "model_calls": optimizer.model_calls,
        "elapsed_seconds": elapsed,
    }


def cmd_run(args) -> int:
    """Run one optimization scenario."""
    # scenarios pull in the benchmark registry; report and validate never need it
    from src.scenario import (
        ScenarioError,
        load_scenario,
        make_objective,
        optimizer_config,
        resolve_space,
        resolved_json,
    )

    logger = configure_logging(args.log_level)
    scenario_path = pathlib.Path(args.scenario)

    overrides = {"output_dir": args.output, "workers": args.workers, "seed": args.seed}
    try:
        scenario = load_scenario(scenario_path, overrides)
        space = resolve_space(scenario, base_dir=scenario_path.parent)
        objective = make_objective(scenario)
        config = optimizer_config(scenario)
    except (ScenarioError, DesignSpaceError, ConfigurationError, ValueError, OSError) as e:
        return _fail(f"{type(e).__name__}: {e}")

    out_dir = pathlib.Path(scenario.output_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_json(out_dir / "scenario.resolved.json", resolved_json(scenario, space))
    except OSError as e:
        return _fail(f"cannot write to output directory {out_dir}: {e}")

    default_loss = None
    if scenario.evaluate_default:
        try:
            default = default_configuration(space)
            default_loss = float(objective(default, config.b_max, default_config_seed(config.seed)))
            logger.info(f"Default configuration loss at budget {config.b_max}: {default_loss:.6g}")
        except Exception as e:  # a failing default must not abort the run
            logger.warning(f"Default configuration could not be evaluated: {e}")

    optimizer = BOHB(space, objective, config)
    start = time.monotonic()
    status, code = "ok", EXIT_OK
    with HistoryWriter(optimizer.history, out_dir / "history.jsonl"):
        try:
            optimizer.run()
        except ObjectiveError as e:
            logger.error(f"Objective failed: {e}")
            print(f"error: ObjectiveError: {e}", file=sys.stderr)
            status, code = "objective_failed", EXIT_OBJECTIVE_FAILED
        except KeyboardInterrupt:
            logger.warning("Interrupted; the history written so far is kept")
            status, code = "interrupted", EXIT_INTERRUPTED

    summary = _summary(optimizer, default_loss, time.monotonic() - start, status)
    _write_json(out_dir / "summary.json", summary)
    if summary["best_loss"] is not None:
        logger.info(
            f"Best loss {summary['best_loss']:.6g} (config {summary['best_config_id']}) "
            f"after {summary['n_trials']} trial(s)"
        )
    logger.info(f"Results written to {out_dir}")
    return code


def _parse_budgets(text: str | None) -> tuple[float, ...] | None:
    if not text:
        return None
    return tuple(float(part) for part in text.split(",") if part.strip())


def _read_default_loss(history_path: pathlib.Path):
    summary_path = history_path.parent / "summary.json"
    if not summary_path.is_file():
        return None
    try:
        return json.loads(summary_path.read_text()).get("default_loss")
    except (OSError, json.JSONDecodeError):
        return None


def cmd_report(args) -> int:
    """Analyse a finished run; never evaluates the objective."""
    logger = configure_logging(args.log_level)
    history_path = pathlib.Path(args.history)

    try:
        space = load_space(args.space)
        history = load_history(history_path, space)
        params = ReportParams(
            forest=ForestParams(
                n_trees=args.n_trees,
                max_depth=args.max_depth,
                min_leaf=args.min_leaf,
                seed=args.seed,
            ),
            mds=MdsParams(seed=args.seed),
            budgets=_parse_budgets(args.budgets),
            interactions=args.interactions,
        )
        report = build_report(history, space, params)
    except (
        SpaceDigestMismatchError,
        SpaceMismatchError,
        SchemaViolationError,
        DesignSpaceError,
        EmptyHistoryError,
        UnknownBudgetError,
        ValueError,
        OSError,
    ) as e:
        return _fail(f"{type(e).__name__}: {e}")

    out_dir = pathlib.Path(args.out)
    figures = []
    if args.plots:
        from src.analysis.plotting import plot_report

        figures = plot_report(report, out_dir / "figures", _read_default_loss(history_path))
    write_report(report, out_dir, figures)
    logger.info(f"Report for {len(history)} trial(s) written to {out_dir}")
    return EXIT_OK


def _condition_forest(space) -> list[str]:
    lines = []

    def walk(name: str, depth: int):
        for child in space.children_of(name):
            values = ", ".join(repr(v) for v in space.condition_for(child).activating_values)
            lines.append(f"{'  ' * depth}- {child} if {name} in {{{values}}}")
            walk(child, depth + 1)

    for hp in space.hyperparameters:
        if space.condition_for(hp.name) is None and space.children_of(hp.name):
            lines.append(hp.name)
            walk(hp.name, 1)
    return lines


def cmd_validate(args) -> int:
    """Check a design-space file and print its normalized summary."""
    configure_logging(args.log_level)
    try:
        space = load_space(args.space)
    except (DesignSpaceError, ValueError, OSError) as e:
        return _fail(f"{type(e).__name__}: {e}")

    print(f"Design space: {args.space}")
    print(f"Dimension: {space.dimension}")
    print(f"Digest: {space.digest}")
    print("")
    print(f"{'Name':<24} {'Type':<12} {'Domain':<32} {'Default'}")
    print("-" * 80)
    for hp in space.hyperparameters:
        if hp.is_numeric:
            domain = f"[{hp.lower}, {hp.upper}]" + (" log" if hp.log_scale else "")
        else:
            domain = "{" + ", ".join(repr(c) for c in hp.choices) + "}"
        print(f"{hp.name:<24} {hp.kind.value:<12} {domain:<32} {hp.default!r}")
    print("")
    print(f"Conditions: {len(space.conditions)}")
    for line in _condition_forest(space):
        print(f"  {line}")
    return EXIT_OK


def _add_log_level(parser):
    parser.add_argument(
        "--log-level",
        default=DEFAULT_LOG_LEVEL,
        type=str.lower,
        choices=list(LOG_LEVELS),
        help="Set logging level (default: $BOAH_LOG or info)",
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="BOAH - multi-fidelity hyperparameter optimization and analysis",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # Run command
    run_parser = subparsers.add_parser("run", help="Optimize a scenario with BOHB")
    run_parser.add_argument("--scenario", required=True, help="Path to the scenario JSON file")
    run_parser.add_argument("--output", help="Output directory (overrides the scenario)")
    run_parser.add_argument(
        "--workers", type=int, help="Number of workers (overrides the scenario)"
    )
    run_parser.add_argument("--seed", type=int, help="Random seed (overrides the scenario)")
    _add_log_level(run_parser)
    run_parser.set_defaults(func=cmd_run)

    # Report command
    report_parser = subparsers.add_parser(
        "report", help="Analyse a run history without evaluating anything"
    )
    report_parser.add_argument("--history", required=True, help="Path to history.jsonl")
    report_parser.add_argument("--space", required=True, help="Path to the design-space JSON")
    report_parser.add_argument("--out", required=True, help="Report output directory")
    report_parser.add_argument(
        "--budgets",
        help="Comma-separated budgets to compute importance for (default: all)",
    )
    report_parser.add_argument(
        "--interactions",
        action="store_true",
        help="Also report pairwise fANOVA interactions",
    )
    report_parser.add_argument(
        "--plots",
        action="store_true",
        help="Write static figures to <out>/figures and link them in report.md",
    )
    report_parser.add_argument("--n-trees", type=int, default=32, help="Forest size (default: 32)")
    report_parser.add_argument(
        "--max-depth", type=int, default=64, help="Maximum tree depth (default: 64)"
    )
    report_parser.add_argument(
        "--min-leaf", type=int, default=3, help="Minimum samples per leaf (default: 3)"
    )
    report_parser.add_argument(
        "--seed", type=int, default=0, help="Seed of the forest and MDS (default: 0)"
    )
    _add_log_level(report_parser)
    report_parser.set_defaults(func=cmd_report)

    # Validate command
    validate_parser = subparsers.add_parser("validate", help="Validate a design-space file")
    validate_parser.add_argument("space", help="Path to the design-space JSON")
    _add_log_level(validate_parser)
    validate_parser.set_defaults(func=cmd_validate)

    args = parser.parse_args(sys.argv[1:] if argv is None else argv)

    if args.command is None:
        parser.print_help()
        return EXIT_OK

    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
