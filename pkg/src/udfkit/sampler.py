"""Training-set construction for neural UDF fitting.

Points are drawn from a mixture of the uniform unit ball and the labeled
surface samples (flat vs. detected-edge subsets), perturbed with isotropic
Gaussian noise, and labeled with their exact unsigned distance.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass

import numpy as np

from .edge_detect import EdgeLabeledCloud
from .errors import InvalidInputError
from .geometry import TriangleMesh
from .udf_oracle import UdfOracle

log = logging.getLogger(__name__)

__all__ = [
    "TAG_BALL",
    "TAG_SURFACE_FLAT",
    "TAG_SURFACE_EDGE",
    "TAG_NAMES",
    "SamplingConfig",
    "TrainingSet",
    "surface_complexity",
    "edge_mixture_weight",
    "sample_training_set",
    "write_training_csv",
    "save_training_cache",
    "load_training_cache",
    "mesh_hash",
    "config_hash",
]

TAG_BALL = 0
TAG_SURFACE_FLAT = 1
TAG_SURFACE_EDGE = 2
TAG_NAMES = {TAG_BALL: "ball", TAG_SURFACE_FLAT: "surface_flat", TAG_SURFACE_EDGE: "surface_edge"}


@dataclass(frozen=True)
class SamplingConfig:
    """Mixture weights and noise level for training-point sampling."""

    n: int
    nu: float = 0.9  # surface-vs-ball weight; the bulk of points sit near the surface
    xi: float = 0.0  # edge-oversampling parameter
    noise_sigma: float = 0.025
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInputError("n must be >= 1")
        if not 0.0 <= self.nu <= 1.0:
            raise InvalidInputError(f"nu must lie in [0, 1], got {self.nu}")
        if not 0.0 <= self.xi <= 1.0:
            raise InvalidInputError(f"xi must lie in [0, 1], got {self.xi}")
        if self.noise_sigma < 0.0:
            raise InvalidInputError("noise_sigma must be >= 0")


@dataclass(frozen=True)
class TrainingSet:
    """Noised training inputs with exact UDF targets and provenance tags."""

    inputs: np.ndarray  # (n, 3) noised points
    targets: np.ndarray  # (n,) true UDF at inputs
    tags: np.ndarray  # (n,) int8, TAG_* constants
    pre_noise: np.ndarray  # (n, 3) points before Gaussian perturbation
    n_edge_fallbacks: int = 0  # edge draws rerouted to the flat set

    @property
    def n(self) -> int:
        return len(self.inputs)


def surface_complexity(cloud: EdgeLabeledCloud) -> float:
    """Fraction of surface samples labeled as edges: |B_s,1| / n_s."""
    return float(len(cloud.edge_indices)) / cloud.n_s


def edge_mixture_weight(tau: float, xi: float) -> float:
    """Share of surface draws taken from the edge set: nu1 = xi + (1 - xi) tau."""
    if not 0.0 <= tau <= 1.0 or not 0.0 <= xi <= 1.0:
        raise InvalidInputError("tau and xi must lie in [0, 1]")
    return xi + (1.0 - xi) * tau


def _uniform_ball(rng, n):
    direction = rng.normal(size=(n, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = rng.random(n) ** (1.0 / 3.0)
    return direction * radius[:, None]


def sample_training_set(mesh: TriangleMesh, cloud: EdgeLabeledCloud,
                        oracle: UdfOracle, cfg: SamplingConfig) -> TrainingSet:
    """Draw the mixture sample, add Gaussian noise, attach exact UDF targets.

    Each point independently comes from the unit ball with probability
    1 - nu, otherwise from the flat surface subset with probability 1 - nu1
    and from the edge subset with probability nu1. When the edge subset is
    empty its draws fall back to the flat subset (logged, counted).
    """
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    tau = surface_complexity(cloud)
    nu1 = edge_mixture_weight(tau, cfg.xi)

    u_surface = rng.random(n)
    u_edge = rng.random(n)
    on_surface = u_surface < cfg.nu
    on_edge = on_surface & (u_edge < nu1)

    edge_idx = cloud.edge_indices
    flat_idx = cloud.flat_indices
    fallbacks = 0
    if on_edge.any() and len(edge_idx) == 0:
        fallbacks = int(on_edge.sum())
        log.warning("edge subset is empty; rerouting %d edge draws to the flat subset", fallbacks)
        on_edge[:] = False
    if (on_surface & ~on_edge).any() and len(flat_idx) == 0:
        # degenerate complement: every surface point was labeled an edge
        on_edge[on_surface] = True

    pre_noise = np.empty((n, 3))
    tags = np.empty(n, dtype=np.int8)
    n_ball = int((~on_surface).sum())
    pre_noise[~on_surface] = _uniform_ball(rng, n_ball)
    tags[~on_surface] = TAG_BALL

    pick_flat = on_surface & ~on_edge
    if pick_flat.any():
        choice = rng.integers(0, len(flat_idx), size=int(pick_flat.sum()))
        pre_noise[pick_flat] = cloud.points[flat_idx[choice]]
        tags[pick_flat] = TAG_SURFACE_FLAT
    if on_edge.any():
        choice = rng.integers(0, len(edge_idx), size=int(on_edge.sum()))
        pre_noise[on_edge] = cloud.points[edge_idx[choice]]
        tags[on_edge] = TAG_SURFACE_EDGE

    noise = rng.normal(0.0, cfg.noise_sigma, size=(n, 3)) if cfg.noise_sigma > 0 else np.zeros((n, 3))
    inputs = pre_noise + noise
    targets = oracle.udf_batch(inputs)
    return TrainingSet(inputs=inputs, targets=targets, tags=tags,
                       pre_noise=pre_noise, n_edge_fallbacks=fallbacks)


def write_training_csv(path, ts: TrainingSet) -> None:
    with open(path, "w") as fh:
        fh.write("x,y,z,udf,tag\n")
        for p, d, tag in zip(ts.inputs, ts.targets, ts.tags):
            fh.write(f"{float(p[0])!r},{float(p[1])!r},{float(p[2])!r},"
                     f"{float(d)!r},{TAG_NAMES[int(tag)]}\n")


def mesh_hash(mesh: TriangleMesh) -> str:
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(mesh.vertices).tobytes())
    digest.update(np.ascontiguousarray(mesh.triangles).tobytes())
    return digest.hexdigest()


def config_hash(*configs) -> str:
    digest = hashlib.sha256()
    for cfg in configs:
        if hasattr(cfg, "__dataclass_fields__"):
            payload = {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}
        else:
            payload = cfg
        digest.update(json.dumps(payload, sort_keys=True, default=str).encode())
    return digest.hexdigest()


def save_training_cache(path, ts: TrainingSet) -> None:
    np.savez_compressed(path, inputs=ts.inputs, targets=ts.targets, tags=ts.tags,
                        pre_noise=ts.pre_noise,
                        n_edge_fallbacks=np.int64(ts.n_edge_fallbacks))


def load_training_cache(path) -> TrainingSet:
    data = np.load(path)
    return TrainingSet(inputs=data["inputs"], targets=data["targets"],
                       tags=data["tags"], pre_noise=data["pre_noise"],
                       n_edge_fallbacks=int(data["n_edge_fallbacks"]))
