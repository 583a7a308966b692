from dataclasses import dataclass

from src.design_space.space import INACTIVE, Configuration, DesignSpace, InvalidConfigurationError

# Rule names reported in violations
BOUND_VIOLATION = "BoundViolation"
ACTIVITY_VIOLATION = "ActivityViolation"
INACTIVE_VALUE_VIOLATION = "InactiveValueViolation"
MISSING_VALUE = "MissingValue"
UNKNOWN_HYPERPARAMETER = "UnknownHyperparameter"


@dataclass(frozen=True)
class Violation:
    """One broken configuration rule."""

    hyperparameter: str
    rule: str
    message: str

    def __str__(self) -> str:
        return f"{self.rule} on '{self.hyperparameter}': {self.message}"


def check_validity(space: DesignSpace, config: Configuration) -> list[Violation]:
    """
    Check a configuration against the rules of its design space.

    A hyperparameter must be active exactly when it has no condition or its
    parent is active with an activating value; active values must be legal and
    inactive ones must carry the ``INACTIVE`` marker.

    Returns
    -------
    list of Violation
        Empty iff the configuration is valid.
    """
    violations = []

    for name in list(config.values) + list(config.active):
        if name not in space.names and not any(v.hyperparameter == name for v in violations):
            violations.append(Violation(name, UNKNOWN_HYPERPARAMETER, "not part of the space"))

    expected = space.activity(config.values)

    for hp in space.hyperparameters:
        name = hp.name
        if name not in config.values or name not in config.active:
            violations.append(Violation(name, MISSING_VALUE, "no value or activity flag"))
            continue

        value = config.values[name]
        is_active = config.active[name]

        if is_active != expected[name]:
            state = "active" if is_active else "inactive"
            violations.append(
                Violation(name, ACTIVITY_VIOLATION, f"marked {state} but conditions say otherwise")
            )
            continue

        if is_active:
            if not hp.contains(value):
                violations.append(
                    Violation(name, BOUND_VIOLATION, f"{value!r} is outside its legal values")
                )
        elif value is not INACTIVE:
            violations.append(
                Violation(name, INACTIVE_VALUE_VIOLATION, f"inactive but carries {value!r}")
            )

    return violations


def ensure_valid(space: DesignSpace, config: Configuration) -> None:
    """Raise InvalidConfigurationError listing every violation, if any."""
    violations = check_validity(space, config)
    if violations:
        raise InvalidConfigurationError("; ".join(str(v) for v in violations))
