import logging
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from src.analysis.pipeline import AnalysisReport, BudgetImportance
from src.analysis.report import format_budget

logger = logging.getLogger(__name__)


def _save(fig, path: Path) -> Path:
    plt.tight_layout()
    plt.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    logger.info(f"Plot saved to {path}")
    return path


def plot_trajectory(report: AnalysisReport, path: Path, default_loss: float | None = None):
    """
    Step plot of the incumbent loss over time.

    Parameters
    ----------
    report : AnalysisReport
        Report holding the incumbent trajectory.
    path : Path
        Output image.
    default_loss : float, optional
        Loss of the default configuration, drawn as a horizontal baseline.
    """
    fig, ax = plt.subplots(figsize=(6, 4))
    times = [p.finished_at for p in report.trajectory]
    losses = [p.best_loss for p in report.trajectory]
    ax.step(times, losses, where="post", linewidth=2, label="Incumbent")
    if default_loss is not None:
        ax.axhline(default_loss, color="r", linestyle="--", label="Default configuration")
    ax.set_xlabel("Time")
    ax.set_ylabel("Loss at max budget")
    ax.set_title("Incumbent over time")
    ax.grid(True, alpha=0.3)
    ax.legend()
    return _save(fig, path)


def _plot_importance_bars(ax, block: BudgetImportance):
    names = [r.name for r in block.rows]
    x = np.arange(len(names))
    width = 0.4
    ax.bar(
        x - width / 2,
        [r.fanova_mean for r in block.rows],
        width,
        yerr=[r.fanova_std for r in block.rows],
        capsize=3,
        label="fANOVA",
    )
    ax.bar(x + width / 2, [r.lpi for r in block.rows], width, label="LPI")
    ax.set_xticks(x)
    ax.set_xticklabels(names)
    ax.tick_params(axis="x", rotation=45)
    ax.set_ylabel("Fraction of variance")
    ax.set_title(f"Importance at budget {format_budget(block.budget)}")
    ax.legend()


def _plot_lpi_curve(ax, block: BudgetImportance):
    active = {name: c for name, c in block.lpi_curves.items() if c.active}
    if not active:
        ax.set_axis_off()
        return
    top = max(active.values(), key=lambda c: c.variance)
    ax.plot(top.grid, top.predictions, "o-")
    ax.set_xlabel(f"{top.name} (unit scale)")
    ax.set_ylabel("Predicted loss")
    ax.set_title(f"Local effect of {top.name}")
    ax.grid(True, alpha=0.3)


def plot_importance(report: AnalysisReport, budget: float, path: Path) -> Path:
    block = report.importance[budget]
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    _plot_importance_bars(axes[0], block)
    _plot_lpi_curve(axes[1], block)
    return _save(fig, path)


def plot_footprint(report: AnalysisReport, path: Path) -> Path:
    points = report.footprint.points
    fig, ax = plt.subplots(figsize=(6, 5))
    x = np.array([p.x for p in points])
    y = np.array([p.y for p in points])
    loss = np.array([p.loss for p in points])
    failed = np.isnan(loss)
    scatter = ax.scatter(x[~failed], y[~failed], c=loss[~failed], cmap="viridis", s=20)
    fig.colorbar(scatter, ax=ax, label="Loss")
    if failed.any():
        ax.scatter(x[failed], y[failed], marker="x", color="grey", label="Failed")
    incumbent = [p for p in points if p.incumbent]
    if incumbent:
        ax.scatter(
            [incumbent[0].x], [incumbent[0].y], marker="*", s=200, color="r", label="Incumbent"
        )
    ax.set_title(f"Configuration footprint (stress {report.footprint.stress:.3f})")
    ax.set_xticks([])
    ax.set_yticks([])
    if failed.any() or incumbent:
        ax.legend()
    return _save(fig, path)


def plot_report(
    report: AnalysisReport, figure_dir: str | Path, default_loss: float | None = None
) -> list[Path]:
    """
    Static figures for a report: trajectory, per-budget importance and footprint.

    Figures whose data is missing are skipped with a warning.
    """
    figure_dir = Path(figure_dir)
    figure_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    if report.trajectory:
        paths.append(plot_trajectory(report, figure_dir / "trajectory.png", default_loss))
    else:
        logger.warning("No incumbent trajectory, skipping trajectory plot")

    for budget, block in report.importance.items():
        if block.skipped:
            continue
        paths.append(
            plot_importance(report, budget, figure_dir / f"importance_{format_budget(budget)}.png")
        )

    if report.footprint is not None:
        paths.append(plot_footprint(report, figure_dir / "footprint.png"))
    else:
        logger.warning("No footprint, skipping footprint plot")
    return paths
