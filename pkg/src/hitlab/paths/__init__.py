"""Seedable path simulation with streaming functionals."""

from .config import SCHEMES, PathConfig, PathFunctionals
from .simulate import (
    PathBatch,
    default_workers,
    reversed_rescaled_path,
    sample_path,
    sample_paths,
    two_pass_uniform_sample,
    write_csv,
)

__all__ = [
    "SCHEMES",
    "PathConfig",
    "PathFunctionals",
    "PathBatch",
    "default_workers",
    "reversed_rescaled_path",
    "sample_path",
    "sample_paths",
    "two_pass_uniform_sample",
    "write_csv",
]
