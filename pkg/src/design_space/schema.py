from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

Value = str | int | float

# ---------- Hyperparameter ----------


class HyperparameterSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = Field(min_length=1)
    type: Literal["continuous", "integer", "ordinal", "categorical"]

    lower: float | None = None
    upper: float | None = None
    log: bool = False

    choices: list[Value] | None = None
    default: Value | None = None


# ---------- Condition ----------


class ConditionSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    child: str
    parent: str
    values: list[Value] = Field(min_length=1)


# ---------- Root Schema ----------


class SpaceSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    hyperparameters: list[HyperparameterSpec]
    conditions: list[ConditionSpec] = Field(default_factory=list)
