"""
Writing an AnalysisReport to a report directory.

The directory holds report.json (everything), one CSV per table and a
Markdown summary. CSVs use CRLF line endings and 17 significant digits.
"""

import json
import logging
import math
from datetime import datetime
from pathlib import Path

import pandas as pd

from src.analysis.pipeline import AnalysisReport

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def format_budget(budget: float) -> str:
    """Budget label used in file names and headers: 9.0 -> "9", 2.5 -> "2.5"."""
    return str(int(budget)) if float(budget).is_integer() else repr(float(budget))


def _finite(value):
    if value is None:
        return None
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _write_csv(frame: pd.DataFrame, path: Path, index: bool = False) -> Path:
    frame.to_csv(path, index=index, float_format=FLOAT_FORMAT, lineterminator="\r\n")
    return path


# ─────────────────────────────────────────────────────────────────────────────
# Tables
# ─────────────────────────────────────────────────────────────────────────────


def trajectory_frame(report: AnalysisReport) -> pd.DataFrame:
    return pd.DataFrame(
        [(p.evaluation_index, p.finished_at, p.best_loss) for p in report.trajectory],
        columns=["index", "time", "loss"],
    )


def importance_frame(report: AnalysisReport, budget: float) -> pd.DataFrame:
    block = report.importance[budget]
    return pd.DataFrame(
        [(r.name, r.fanova_mean, r.fanova_std, r.lpi) for r in block.rows],
        columns=["hp", "fanova_mean", "fanova_std", "lpi"],
    )


def pairs_frame(report: AnalysisReport, budget: float) -> pd.DataFrame:
    block = report.importance[budget]
    return pd.DataFrame(
        [(p.name_a, p.name_b, p.fanova_mean, p.fanova_std) for p in block.pairs],
        columns=["hp_a", "hp_b", "fanova_mean", "fanova_std"],
    )


def correlation_frame(report: AnalysisReport) -> pd.DataFrame:
    labels = [format_budget(b) for b in report.rank_correlation.index]
    frame = report.rank_correlation.copy()
    frame.index = labels
    frame.columns = labels
    frame.index.name = "budget"
    return frame


def footprint_frame(report: AnalysisReport) -> pd.DataFrame:
    points = report.footprint.points if report.footprint is not None else ()
    return pd.DataFrame(
        [(p.config_id, p.x, p.y, p.loss, p.budget, p.incumbent) for p in points],
        columns=["config_id", "x", "y", "loss", "budget", "incumbent"],
    )


def report_to_dict(report: AnalysisReport) -> dict:
    """JSON-ready form of the report; non-finite numbers become null."""
    importance = {}
    for budget, block in report.importance.items():
        importance[format_budget(budget)] = {
            "budget": budget,
            "n_obs": block.n_obs,
            "note": block.note,
            "degenerate": block.degenerate,
            "hyperparameters": [
                {
                    "name": r.name,
                    "fanova_mean": _finite(r.fanova_mean),
                    "fanova_std": _finite(r.fanova_std),
                    "lpi": _finite(r.lpi),
                }
                for r in block.rows
            ],
            "pairs": [
                {
                    "names": [p.name_a, p.name_b],
                    "fanova_mean": _finite(p.fanova_mean),
                    "fanova_std": _finite(p.fanova_std),
                }
                for p in block.pairs
            ],
            "lpi_curves": {
                name: {
                    "values": curve.values,
                    "predictions": [float(v) for v in curve.predictions],
                }
                for name, curve in block.lpi_curves.items()
                if curve.active
            },
        }

    matrix = report.rank_correlation
    correlation = {
        "budgets": [float(b) for b in matrix.index],
        "matrix": [[_finite(float(v)) for v in row] for row in matrix.to_numpy()],
    }

    footprint = None
    if report.footprint is not None:
        footprint = {
            "stress": report.footprint.stress,
            "degenerate": report.footprint.degenerate,
            "points": [
                {
                    "config_id": p.config_id,
                    "x": p.x,
                    "y": p.y,
                    "loss": _finite(p.loss),
                    "budget": p.budget,
                    "incumbent": p.incumbent,
                }
                for p in report.footprint.points
            ],
        }

    return {
        "space_digest": report.space_digest,
        "budgets": report.budgets,
        "n_records": report.n_records,
        "n_failed": report.n_failed,
        "incumbent": {
            "config_id": report.incumbent_id,
            "loss": report.incumbent_loss,
            "config": report.incumbent_config,
        },
        "trajectory": [
            {
                "index": p.evaluation_index,
                "time": p.finished_at,
                "loss": p.best_loss,
                "config_id": p.config_id,
            }
            for p in report.trajectory
        ],
        "importance": importance,
        "rank_correlation": correlation,
        "footprint": footprint,
        "notes": report.notes,
    }


# ─────────────────────────────────────────────────────────────────────────────
# Markdown
# ─────────────────────────────────────────────────────────────────────────────


def _fmt(value, spec: str = ".4f") -> str:
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return "-"
    return format(value, spec)


def generate_markdown_report(report: AnalysisReport, figures: list[Path] | None = None) -> str:
    lines = []

    lines.append("# Optimization Analysis Report")
    lines.append("")
    lines.append(f"**Generated:** {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    lines.append("")

    lines.append("## Summary")
    lines.append("")
    lines.append(f"- **Trials:** {report.n_records} ({report.n_failed} failed)")
    lines.append(f"- **Budgets:** {', '.join(format_budget(b) for b in report.budgets)}")
    if report.incumbent_id is not None:
        lines.append(
            f"- **Incumbent:** config {report.incumbent_id} with loss "
            f"{_fmt(report.incumbent_loss, '.6g')}"
        )
        lines.append(f"- **Incumbent configuration:** `{json.dumps(report.incumbent_config)}`")
    lines.append("")

    lines.append("## Hyperparameter Importance")
    lines.append("")
    for budget, block in report.importance.items():
        lines.append(f"### Budget {format_budget(budget)} ({block.n_obs} observations)")
        lines.append("")
        if block.skipped:
            lines.append(f"_{block.note}_")
            lines.append("")
            continue
        if block.degenerate:
            lines.append("_Constant surrogate: all variance fractions are 0._")
            lines.append("")
        lines.append("| Hyperparameter | fANOVA | std | LPI |")
        lines.append("|:---------------|-------:|----:|----:|")
        for r in sorted(block.rows, key=lambda r: -r.fanova_mean):
            lines.append(
                f"| {r.name} | {_fmt(r.fanova_mean, '.1%')} | {_fmt(r.fanova_std, '.1%')} "
                f"| {_fmt(r.lpi, '.1%')} |"
            )
        lines.append("")

    lines.append("## Rank Correlation Between Budgets")
    lines.append("")
    labels = [format_budget(b) for b in report.rank_correlation.index]
    lines.append("| budget | " + " | ".join(labels) + " |")
    lines.append("|:--|" + "--:|" * len(labels))
    for label, row in zip(labels, report.rank_correlation.to_numpy()):
        lines.append(f"| {label} | " + " | ".join(_fmt(float(v), ".3f") for v in row) + " |")
    lines.append("")

    lines.append("## Footprint")
    lines.append("")
    if report.footprint is None:
        lines.append("_Not computed._")
    else:
        lines.append(
            f"{len(report.footprint.points)} configurations embedded, "
            f"normalised stress {report.footprint.stress:.4f}."
        )
    lines.append("")

    if report.notes:
        lines.append("## Notes")
        lines.append("")
        lines.extend(f"- {note}" for note in report.notes)
        lines.append("")

    for figure in figures or []:
        lines.append(f'<img src="figures/{figure.name}" alt="{figure.stem}" height="300">')
        lines.append("")

    return "\n".join(lines)


def write_report(
    report: AnalysisReport, out_dir: str | Path, figures: list[Path] | None = None
) -> list[Path]:
    """
    Write the report directory.

    Returns
    -------
    list of Path
        Every file written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    path = out_dir / "report.json"
    path.write_text(json.dumps(report_to_dict(report), indent=2, allow_nan=False))
    written.append(path)

    written.append(_write_csv(trajectory_frame(report), out_dir / "trajectory.csv"))
    for budget, block in report.importance.items():
        if block.skipped:
            continue
        label = format_budget(budget)
        written.append(
            _write_csv(importance_frame(report, budget), out_dir / f"importance_{label}.csv")
        )
        if block.pairs:
            written.append(
                _write_csv(pairs_frame(report, budget), out_dir / f"importance_pairs_{label}.csv")
            )
    written.append(
        _write_csv(correlation_frame(report), out_dir / "rank_correlation.csv", index=True)
    )
    written.append(_write_csv(footprint_frame(report), out_dir / "footprint.csv"))

    path = out_dir / "report.md"
    path.write_text(generate_markdown_report(report, figures))
    written.append(path)

    logger.info(f"Report written to {out_dir} ({len(written)} file(s))")
    return written
