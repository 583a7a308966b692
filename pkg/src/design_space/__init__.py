"""Conditional mixed-type design spaces: definition, sampling and encoding."""

from src.design_space.encoding import (
    ComponentOutOfRangeError,
    ValueOutOfBoundsError,
    WrongDimensionError,
    encode_many,
    from_unit_vector,
    to_unit_vector,
)
from src.design_space.sampling import default_configuration, sample_configuration
from src.design_space.schema import SpaceSpec
from src.design_space.space import (
    INACTIVE,
    Condition,
    Configuration,
    CycleInConditionsError,
    DesignSpace,
    DesignSpaceError,
    DuplicateConditionError,
    DuplicateNameError,
    Hyperparameter,
    HyperparameterKind,
    IllegalActivatingValueError,
    IllegalBoundsError,
    IllegalChoicesError,
    IllegalDefaultError,
    InvalidConfigurationError,
    UnknownParentOrChildError,
    build_space,
    load_space,
    space_from_json,
)
from src.design_space.validate import Violation, check_validity, ensure_valid

__all__ = [
    # Types
    "INACTIVE",
    "Condition",
    "Configuration",
    "DesignSpace",
    "Hyperparameter",
    "HyperparameterKind",
    "SpaceSpec",
    "Violation",
    # Construction
    "build_space",
    "load_space",
    "space_from_json",
    # Sampling and encoding
    "default_configuration",
    "sample_configuration",
    "encode_many",
    "from_unit_vector",
    "to_unit_vector",
    # Validation
    "check_validity",
    "ensure_valid",
    # Errors
    "ComponentOutOfRangeError",
    "CycleInConditionsError",
    "DesignSpaceError",
    "DuplicateConditionError",
    "DuplicateNameError",
    "IllegalActivatingValueError",
    "IllegalBoundsError",
    "IllegalChoicesError",
    "IllegalDefaultError",
    "InvalidConfigurationError",
    "UnknownParentOrChildError",
    "ValueOutOfBoundsError",
    "WrongDimensionError",
]
