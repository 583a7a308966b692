"""BOAH - multi-fidelity hyperparameter optimization and post-hoc analysis."""

__version__ = "0.1.0"
