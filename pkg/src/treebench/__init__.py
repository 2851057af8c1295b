"""treebench: ListOps-style diagnostics, tree-structured models, and a training harness."""

__version__ = "0.1.0"

from . import harness, latent_parser, listops, models, numcore, ordered_memory  # noqa: F401
