"""udfkit: statistical edge detection on point clouds and edge-aware neural
unsigned distance field training."""

from . import (
    circular_stats,
    cli,
    edge_detect,
    errors,
    geometry,
    neural_udf,
    reconstruct_eval,
    sampler,
    toygen,
    udf_oracle,
)

__all__ = [
    "circular_stats",
    "cli",
    "edge_detect",
    "errors",
    "geometry",
    "neural_udf",
    "reconstruct_eval",
    "sampler",
    "toygen",
    "udf_oracle",
]

__version__ = "0.1.0"
