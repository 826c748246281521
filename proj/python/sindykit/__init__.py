"""Sparse identification of nonlinear dynamics with control inputs."""

from ._sindykit import (
    ConfigError,
    DataError,
    Model,
    NumericalError,
    __version__,
    crossvalidate,
    excitation,
    fit,
    kfold_split,
    lambda_grid,
    library_terms,
    mae,
    make_model,
    reference,
    reference_names,
    refine,
    run_cli,
    simulate,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Model",
    "NumericalError",
    "__version__",
    "crossvalidate",
    "excitation",
    "fit",
    "kfold_split",
    "lambda_grid",
    "library_terms",
    "mae",
    "make_model",
    "reference",
    "reference_names",
    "refine",
    "run_cli",
    "simulate",
]
