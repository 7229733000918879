"""Linear ICA by minimizing a neural mutual information estimate."""

import json

from ._mineica import (
    ConfigError,
    ContractError,
    NumericalError,
    ShapeError,
    amari_index,
    benchmark,
    estimate_gaussian_mi,
    fastica,
    gaussian_mutual_information,
    gradcheck,
    matched_correlation,
    train,
    whiten,
)
from ._mineica import run_experiment as _run_experiment

__all__ = [
    "ConfigError",
    "ContractError",
    "NumericalError",
    "ShapeError",
    "amari_index",
    "benchmark",
    "estimate_gaussian_mi",
    "fastica",
    "gaussian_mutual_information",
    "gradcheck",
    "matched_correlation",
    "run_experiment",
    "train",
    "whiten",
]


def run_experiment(config=None, output_dir=""):
    """Run the full pipeline. config is a dict (or JSON string); returns the two reports as dicts."""
    if config is None:
        config = {}
    text = config if isinstance(config, str) else json.dumps(config)
    mine, fast = _run_experiment(text, str(output_dir))
    return json.loads(mine), json.loads(fast)
