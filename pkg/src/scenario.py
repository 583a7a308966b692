"""Scenario files for ``main.py run``: schema, loading and resolution."""

import json
import logging
import math
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.benchmarks import get_objective
from src.design_space import DesignSpace, SpaceSpec, load_space, space_from_json
from src.optimizer import CommandObjective, Objective, OptimizerConfig

logger = logging.getLogger(__name__)


class ScenarioError(ValueError):
    pass


# ---------- Objective ----------


class BuiltinObjectiveSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    builtin: str = Field(min_length=1)
    sigma: float | None = Field(default=None, ge=0)


class CommandObjectiveSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: list[str] = Field(min_length=1)
    timeout: float | None = Field(default=None, gt=0)


# ---------- Root Schema ----------


class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid")

    # inline space object or a path relative to the scenario file
    space: SpaceSpec | str | None = None
    objective: BuiltinObjectiveSpec | CommandObjectiveSpec

    min_budget: float = Field(default=1.0, gt=0)
    max_budget: float = Field(default=9.0, gt=0)
    eta: int = Field(default=3, ge=2)
    # declared budgets; planned budgets are snapped onto the nearest one
    budgets: list[float] | None = Field(default=None, min_length=1)
    iterations: int = Field(default=12, ge=1)
    workers: int = Field(default=1, ge=1)
    seed: int = 0

    rho: float = Field(default=1 / 3, ge=0, le=1)
    gamma: float = Field(default=0.15, gt=0, lt=1)
    n_samples: int = Field(default=64, ge=1)
    bandwidth_factor: float = Field(default=3.0, gt=0)

    wall_clock_limit: float | None = Field(default=None, gt=0)
    brackets: Literal["hyperband", "sh"] = "hyperband"
    clock: Literal["virtual", "wall"] = "virtual"
    pool: Literal["thread", "process"] = "thread"
    evaluate_default: bool = True

    output_dir: str = "boah_output"

    @model_validator(mode="after")
    def _check(self):
        if self.min_budget > self.max_budget:
            raise ValueError(
                f"min_budget ({self.min_budget}) must be <= max_budget ({self.max_budget})"
            )
        if self.budgets is not None:
            if not all(math.isfinite(b) and b > 0 for b in self.budgets):
                raise ValueError(f"budgets must be positive and finite, got {self.budgets}")
            if len(set(self.budgets)) != len(self.budgets):
                raise ValueError(f"budgets contain duplicates: {self.budgets}")
        if isinstance(self.objective, CommandObjectiveSpec) and self.space is None:
            raise ValueError("space is required for a command objective")
        return self


def load_scenario(path: str | Path, overrides: dict | None = None) -> Scenario:
    """
    Parse and validate a scenario file.

    Raises
    ------
    ScenarioError
        If the file cannot be read, is not JSON or fails validation.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ScenarioError(f"cannot read scenario {path}: {e}") from e
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return Scenario.model_validate(data)
    except ValueError as e:
        raise ScenarioError(str(e)) from e


def resolve_space(scenario: Scenario, base_dir: str | Path = ".") -> DesignSpace:
    """The scenario's design space; a builtin objective supplies its own when none is given."""
    if isinstance(scenario.space, SpaceSpec):
        return space_from_json(scenario.space.model_dump(mode="json", exclude_none=True))
    if isinstance(scenario.space, str):
        space_path = Path(scenario.space)
        if not space_path.is_absolute():
            space_path = Path(base_dir) / space_path
        return load_space(space_path)
    return get_objective(scenario.objective.builtin).space


def make_objective(scenario: Scenario) -> Objective:
    spec = scenario.objective
    if isinstance(spec, CommandObjectiveSpec):
        return CommandObjective(spec.command, timeout=spec.timeout)
    return get_objective(spec.builtin, sigma=spec.sigma)


def optimizer_config(scenario: Scenario) -> OptimizerConfig:
    return OptimizerConfig(
        b_min=scenario.min_budget,
        b_max=scenario.max_budget,
        eta=scenario.eta,
        n_iterations=scenario.iterations,
        rho=scenario.rho,
        gamma=scenario.gamma,
        n_samples=scenario.n_samples,
        bandwidth_factor=scenario.bandwidth_factor,
        n_workers=scenario.workers,
        seed=scenario.seed,
        wall_clock_limit=scenario.wall_clock_limit,
        budgets=tuple(scenario.budgets) if scenario.budgets else None,
        brackets=scenario.brackets,
        clock=scenario.clock,
        pool=scenario.pool,
    )


def resolved_json(scenario: Scenario, space: DesignSpace) -> dict:
    """Scenario with every default written out and the space inlined."""
    data = scenario.model_dump(mode="json")
    data["space"] = space.to_json()
    if isinstance(scenario.objective, BuiltinObjectiveSpec):
        data["objective"] = {
            "builtin": scenario.objective.builtin,
            "sigma": make_objective(scenario).sigma,
        }
    return data
