"""Hyperparameters, conditions and the validated design space."""

import enum
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from pathlib import Path
from typing import Any

from src.design_space.schema import ConditionSpec, HyperparameterSpec, SpaceSpec

logger = logging.getLogger(__name__)

# Marker carried by inactive hyperparameters (serialized as JSON null)
INACTIVE = None


# ─────────────────────────────────────────────────────────────────────────────
# Errors
# ─────────────────────────────────────────────────────────────────────────────


class DesignSpaceError(ValueError):
    """Base class for invalid design space definitions."""

    pass


class DuplicateNameError(DesignSpaceError):
    pass


class CycleInConditionsError(DesignSpaceError):
    pass


class UnknownParentOrChildError(DesignSpaceError):
    pass


class IllegalBoundsError(DesignSpaceError):
    pass


class IllegalActivatingValueError(DesignSpaceError):
    pass


class IllegalChoicesError(DesignSpaceError):
    pass


class IllegalDefaultError(DesignSpaceError):
    pass


class DuplicateConditionError(DesignSpaceError):
    pass


class InvalidConfigurationError(ValueError):
    """Raised when a configuration violates the rules of its design space."""

    pass


# ─────────────────────────────────────────────────────────────────────────────
# Domain types
# ─────────────────────────────────────────────────────────────────────────────


class HyperparameterKind(enum.Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer"
    ORDINAL = "ordinal"
    CATEGORICAL = "categorical"


NUMERIC_KINDS = (HyperparameterKind.CONTINUOUS, HyperparameterKind.INTEGER)
CHOICE_KINDS = (HyperparameterKind.ORDINAL, HyperparameterKind.CATEGORICAL)


@dataclass(frozen=True)
class Hyperparameter:
    """One coordinate of the design space."""

    name: str
    kind: HyperparameterKind
    lower: float | None = None
    upper: float | None = None
    log_scale: bool = False
    choices: tuple = ()
    default: Any = None

    @property
    def is_numeric(self) -> bool:
        return self.kind in NUMERIC_KINDS

    @property
    def n_choices(self) -> int:
        return len(self.choices)

    def contains(self, value: Any) -> bool:
        """Return True if ``value`` is a legal native value of this hyperparameter."""
        if value is None or isinstance(value, bool):
            return False
        if self.kind in CHOICE_KINDS:
            return value in self.choices
        if not isinstance(value, int | float) or not math.isfinite(value):
            return False
        if self.kind == HyperparameterKind.INTEGER and value != round(value):
            return False
        return self.lower <= value <= self.upper

    def index_of(self, value: Any) -> int:
        return self.choices.index(value)


@dataclass(frozen=True)
class Condition:
    """``child`` is active iff ``parent`` is active and takes one of ``activating_values``."""

    child: str
    parent: str
    activating_values: tuple

    def is_satisfied_by(self, parent_value: Any) -> bool:
        return parent_value is not INACTIVE and parent_value in self.activating_values


@dataclass(frozen=True)
class Configuration:
    """An assignment of native values with its activity mask.

    Inactive hyperparameters carry ``INACTIVE`` and ``active[name] is False``.
    """

    values: dict[str, Any]
    active: dict[str, bool]

    def __getitem__(self, name: str) -> Any:
        return self.values[name]

    def to_dict(self) -> dict[str, Any]:
        """Active values only, keyed by hyperparameter name."""
        return {name: v for name, v in self.values.items() if self.active.get(name, False)}


@dataclass(frozen=True)
class DesignSpace:
    hyperparameters: tuple[Hyperparameter, ...]
    conditions: tuple[Condition, ...] = ()
    # Filled in by build_space
    topological_order: tuple[str, ...] = field(default=(), compare=False)

    @property
    def dimension(self) -> int:
        return len(self.hyperparameters)

    @property
    def names(self) -> list[str]:
        return [hp.name for hp in self.hyperparameters]

    def __getitem__(self, name: str) -> Hyperparameter:
        for hp in self.hyperparameters:
            if hp.name == name:
                return hp
        raise KeyError(name)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def condition_for(self, name: str) -> Condition | None:
        for cond in self.conditions:
            if cond.child == name:
                return cond
        return None

    def children_of(self, name: str) -> list[str]:
        return [c.child for c in self.conditions if c.parent == name]

    def activity(self, values: dict[str, Any]) -> dict[str, bool]:
        """Compute the activity mask implied by ``values`` (parents before children)."""
        active: dict[str, bool] = {}
        for name in self.topological_order:
            cond = self.condition_for(name)
            if cond is None:
                active[name] = True
            else:
                active[name] = active[cond.parent] and cond.is_satisfied_by(
                    values.get(cond.parent, INACTIVE)
                )
        return {name: active[name] for name in self.names}

    def make_configuration(self, values: dict[str, Any]) -> Configuration:
        """Build a configuration from native values, recomputing activity.

        Values of hyperparameters that end up inactive are replaced by ``INACTIVE``.
        """
        resolved: dict[str, Any] = {}
        active: dict[str, bool] = {}
        for name in self.topological_order:
            cond = self.condition_for(name)
            is_active = cond is None or (
                active[cond.parent] and cond.is_satisfied_by(resolved[cond.parent])
            )
            active[name] = is_active
            resolved[name] = values.get(name, INACTIVE) if is_active else INACTIVE
        return Configuration(
            values={n: resolved[n] for n in self.names},
            active={n: active[n] for n in self.names},
        )

    def to_spec(self) -> SpaceSpec:
        hps = []
        for hp in self.hyperparameters:
            if hp.is_numeric:
                hps.append(
                    HyperparameterSpec(
                        name=hp.name,
                        type=hp.kind.value,
                        lower=hp.lower,
                        upper=hp.upper,
                        log=hp.log_scale,
                        default=hp.default,
                    )
                )
            else:
                hps.append(
                    HyperparameterSpec(
                        name=hp.name,
                        type=hp.kind.value,
                        choices=list(hp.choices),
                        default=hp.default,
                    )
                )
        conds = [
            ConditionSpec(child=c.child, parent=c.parent, values=list(c.activating_values))
            for c in self.conditions
        ]
        return SpaceSpec(hyperparameters=hps, conditions=conds)

    def to_json(self) -> dict:
        return self.to_spec().model_dump(mode="json", exclude_none=True)

    @property
    def digest(self) -> str:
        """SHA-256 of the canonical JSON form of the space."""
        canonical = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ─────────────────────────────────────────────────────────────────────────────
# Construction
# ─────────────────────────────────────────────────────────────────────────────


def _resolve_default(hp: Hyperparameter) -> Any:
    """Pick a default when none was declared."""
    if hp.kind in CHOICE_KINDS:
        return hp.choices[0]
    if hp.log_scale:
        mid = math.sqrt(hp.lower * hp.upper)
    else:
        mid = 0.5 * (hp.lower + hp.upper)
    if hp.kind == HyperparameterKind.INTEGER:
        return int(min(max(round(mid), hp.lower), hp.upper))
    return mid


def _check_hyperparameter(hp: Hyperparameter) -> Hyperparameter:
    if hp.is_numeric:
        if hp.lower is None or hp.upper is None:
            raise IllegalBoundsError(f"'{hp.name}': lower and upper are required")
        if not (math.isfinite(hp.lower) and math.isfinite(hp.upper)):
            raise IllegalBoundsError(f"'{hp.name}': bounds must be finite")
        if hp.kind == HyperparameterKind.CONTINUOUS and not hp.lower < hp.upper:
            raise IllegalBoundsError(f"'{hp.name}': lower must be < upper")
        if hp.kind == HyperparameterKind.INTEGER:
            if hp.lower > hp.upper:
                raise IllegalBoundsError(f"'{hp.name}': lower must be <= upper")
            if hp.lower != round(hp.lower) or hp.upper != round(hp.upper):
                raise IllegalBoundsError(f"'{hp.name}': integer bounds must be integral")
        if hp.log_scale and hp.lower <= 0:
            raise IllegalBoundsError(f"'{hp.name}': log scale requires lower > 0")
        if hp.choices:
            raise IllegalChoicesError(f"'{hp.name}': choices are only allowed for choice kinds")
        if hp.kind == HyperparameterKind.INTEGER:
            hp = Hyperparameter(
                name=hp.name,
                kind=hp.kind,
                lower=int(hp.lower),
                upper=int(hp.upper),
                log_scale=hp.log_scale,
                default=int(hp.default) if isinstance(hp.default, float) else hp.default,
            )
    else:
        if hp.lower is not None or hp.upper is not None or hp.log_scale:
            raise IllegalBoundsError(f"'{hp.name}': bounds and log scale are numeric-only")
        if not hp.choices:
            raise IllegalChoicesError(f"'{hp.name}': choices must be non-empty")
        if len(set(hp.choices)) != len(hp.choices):
            raise IllegalChoicesError(f"'{hp.name}': choices contain duplicates")

    if hp.default is None:
        hp = Hyperparameter(
            name=hp.name,
            kind=hp.kind,
            lower=hp.lower,
            upper=hp.upper,
            log_scale=hp.log_scale,
            choices=hp.choices,
            default=_resolve_default(hp),
        )
    if not hp.contains(hp.default):
        raise IllegalDefaultError(f"'{hp.name}': default {hp.default!r} is not a legal value")
    return hp


def build_space(
    hyperparameters: list[Hyperparameter],
    conditions: list[Condition] | None = None,
) -> DesignSpace:
    """
    Validate hyperparameters and conditions and build a design space.

    Hyperparameters keep their declaration order.

    Raises
    ------
    DesignSpaceError
        One of its subclasses naming the first violated rule.
    """
    conditions = list(conditions or [])

    seen: set[str] = set()
    checked = []
    for hp in hyperparameters:
        if hp.name in seen:
            raise DuplicateNameError(f"duplicate hyperparameter name '{hp.name}'")
        seen.add(hp.name)
        checked.append(_check_hyperparameter(hp))
    by_name = {hp.name: hp for hp in checked}

    children: set[str] = set()
    graph: dict[str, set[str]] = {hp.name: set() for hp in checked}
    for cond in conditions:
        for role, name in (("child", cond.child), ("parent", cond.parent)):
            if name not in by_name:
                raise UnknownParentOrChildError(f"condition {role} '{name}' is not defined")
        if cond.child == cond.parent:
            raise CycleInConditionsError(f"'{cond.child}' cannot condition on itself")
        if cond.child in children:
            raise DuplicateConditionError(f"'{cond.child}' already has a condition")
        children.add(cond.child)
        if not cond.activating_values:
            raise IllegalActivatingValueError(f"condition on '{cond.child}' has no values")
        parent = by_name[cond.parent]
        for value in cond.activating_values:
            if not parent.contains(value):
                raise IllegalActivatingValueError(
                    f"value {value!r} is not legal for parent '{cond.parent}'"
                )
        graph[cond.child].add(cond.parent)

    try:
        order = tuple(TopologicalSorter(graph).static_order())
    except CycleError as e:
        raise CycleInConditionsError(f"conditions form a cycle: {e.args[1]}") from e

    space = DesignSpace(
        hyperparameters=tuple(checked),
        conditions=tuple(
            Condition(c.child, c.parent, tuple(c.activating_values)) for c in conditions
        ),
        topological_order=order,
    )
    logger.debug(f"Built design space with d={space.dimension}, {len(conditions)} condition(s)")
    return space


def space_from_spec(spec: SpaceSpec) -> DesignSpace:
    hps = [
        Hyperparameter(
            name=h.name,
            kind=HyperparameterKind(h.type),
            lower=h.lower,
            upper=h.upper,
            log_scale=h.log,
            choices=tuple(h.choices or ()),
            default=h.default,
        )
        for h in spec.hyperparameters
    ]
    conds = [Condition(c.child, c.parent, tuple(c.values)) for c in spec.conditions]
    return build_space(hps, conds)


def space_from_json(data: dict) -> DesignSpace:
    """Build a space from the JSON object form (unknown keys rejected)."""
    return space_from_spec(SpaceSpec.model_validate(data))


def load_space(path: str | Path) -> DesignSpace:
    with open(path, encoding="utf-8") as f:
        return space_from_json(json.load(f))
