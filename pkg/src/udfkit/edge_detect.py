"""Per-point edge descriptors over a sampled surface cloud.

Two descriptors are computed at each sampled point: the eigenvalue-ratio
surface variation (Pauly's descriptor) and the statistical KS descriptor,
which thresholds the p-value of a Kolmogorov uniformity test on the
Fréchet-centered polar angles of the projected neighborhood.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .circular_stats import (
    MIN_TEST_SAMPLE,
    center_angles,
    ks_uniformity_test,
    sign_test,
    to_polar,
)
from .errors import DegenerateFrameError, EmptySampleError, InvalidInputError
from .geometry import (
    KdTree,
    Neighborhood,
    PointCloud,
    TriangleMesh,
    covariance_frame,
    knn,
    local_frame,
    project_to_average_plane,
    sample_surface_uniform,
    write_csv_points,
    write_ply_points,
)

log = logging.getLogger(__name__)

__all__ = [
    "DetectorConfig",
    "EdgeLabeledCloud",
    "pauly_descriptor",
    "KsDescriptor",
    "ks_descriptor",
    "detect_edges",
    "OddsRatioDescriptor",
    "odds_ratio_descriptor_2d",
    "export_labeled_csv",
    "export_labeled_ply",
]

DEFAULT_P0 = 0.2
DEFAULT_P0_2D = 0.01


@dataclass(frozen=True)
class DetectorConfig:
    """Edge-detection parameters: sample count, neighborhood size, threshold."""

    n_s: int = 2000
    k: int = 40
    p0: float = DEFAULT_P0
    seed: int = 0

    def __post_init__(self):
        if self.k < MIN_TEST_SAMPLE:
            raise InvalidInputError(f"k must be >= {MIN_TEST_SAMPLE}, got {self.k}")
        if self.n_s <= self.k:
            raise InvalidInputError(f"n_s must exceed k, got n_s={self.n_s}, k={self.k}")
        if not 0.0 <= self.p0 <= 1.0:
            raise InvalidInputError(f"p0 must lie in [0, 1], got {self.p0}")


@dataclass(frozen=True)
class EdgeLabeledCloud:
    """Surface samples with per-point descriptor values and the 0/1 edge label."""

    points: np.ndarray  # (n_s, 3)
    pauly: np.ndarray  # (n_s,) surface variation in [0, 1/3]
    p_value: np.ndarray  # (n_s,)
    label: np.ndarray  # (n_s,) uint8; 1 <=> p_value <= p0
    p0: float
    n_insufficient: int = 0  # points labeled 0 for lack of usable angles

    @property
    def n_s(self) -> int:
        return len(self.points)

    @property
    def edge_indices(self) -> np.ndarray:
        """Indices of B_s,1 (detected edge points)."""
        return np.flatnonzero(self.label == 1)

    @property
    def flat_indices(self) -> np.ndarray:
        """Indices of B_s,0 (undetected points)."""
        return np.flatnonzero(self.label == 0)

    def cloud(self) -> PointCloud:
        return PointCloud(self.points, labels=self.label.astype(np.int64))


def pauly_descriptor(nbhd: Neighborhood) -> float:
    """Surface variation lam3 / (lam1 + lam2 + lam3) of the k+1 point frame."""
    frame = local_frame(nbhd)
    total = float(frame.eigenvalues.sum())
    if total < 1e-15:
        raise DegenerateFrameError("covariance trace is numerically zero")
    return float(frame.eigenvalues[2] / total)


class KsDescriptor(NamedTuple):
    p_value: float
    label: int
    n_usable: int  # angles surviving the zero-radius filter


def ks_descriptor(nbhd: Neighborhood, p0: float = DEFAULT_P0) -> KsDescriptor:
    """KS edge descriptor of a neighborhood.

    Pipeline: local frame, projection onto the average plane, centering on the
    projected query point, polar angles (near-zero radii dropped), Fréchet
    centering, Kolmogorov uniformity test. Points with fewer than 5 usable
    angles are labeled non-edge with p = 1.
    """
    if nbhd.k < MIN_TEST_SAMPLE:
        raise InvalidInputError(f"need k >= {MIN_TEST_SAMPLE}")
    frame = local_frame(nbhd)
    proj = project_to_average_plane(nbhd, frame)
    centered = proj[1:] - proj[0]
    try:
        polar = to_polar(centered)
    except EmptySampleError:
        return KsDescriptor(p_value=1.0, label=0, n_usable=0)
    if polar.k < MIN_TEST_SAMPLE:
        return KsDescriptor(p_value=1.0, label=0, n_usable=polar.k)
    result = ks_uniformity_test(center_angles(polar.angles))
    p = result.p_value
    return KsDescriptor(p_value=p, label=int(p <= p0), n_usable=polar.k)


def detect_edges(mesh: TriangleMesh, cfg: DetectorConfig) -> EdgeLabeledCloud:
    """Sample the surface and label every sample with both descriptors."""
    cloud = sample_surface_uniform(mesh, cfg.n_s, cfg.seed)
    index = KdTree(cloud.points)
    n = cfg.n_s
    pauly = np.empty(n)
    p_value = np.empty(n)
    label = np.zeros(n, dtype=np.uint8)
    insufficient = 0
    for i in range(n):
        nbhd = knn(index, cloud.points[i], cfg.k, exclude_self=True)
        pauly[i] = pauly_descriptor(nbhd)
        desc = ks_descriptor(nbhd, cfg.p0)
        p_value[i] = desc.p_value
        label[i] = desc.label
        if desc.n_usable < MIN_TEST_SAMPLE:
            insufficient += 1
    if insufficient:
        log.warning("%d of %d points had fewer than %d usable angles",
                    insufficient, n, MIN_TEST_SAMPLE)
    return EdgeLabeledCloud(points=cloud.points, pauly=pauly, p_value=p_value,
                            label=label, p0=cfg.p0, n_insufficient=insufficient)


class OddsRatioDescriptor(NamedTuple):
    p_value: float
    label: int


def odds_ratio_descriptor_2d(center, neighbors, p0: float = DEFAULT_P0_2D) -> OddsRatioDescriptor:
    """2D edge descriptor: sign test of the projections on the average axis.

    The average axis is the first eigenvector of the covariance of the k+1
    points (query included); projections are centered on the query point.
    """
    center = np.asarray(center, dtype=np.float64)
    neighbors = np.asarray(neighbors, dtype=np.float64)
    if neighbors.ndim != 2 or neighbors.shape[1] != 2 or center.shape != (2,):
        raise InvalidInputError("expected a 2D center and (k, 2) neighbors")
    if len(neighbors) < MIN_TEST_SAMPLE:
        raise InvalidInputError(f"need k >= {MIN_TEST_SAMPLE}")
    frame = covariance_frame(np.vstack([center[None, :], neighbors]))
    e1 = frame.eigenvectors[:, 0]
    projections = (neighbors - center) @ e1
    result = sign_test(projections)
    return OddsRatioDescriptor(p_value=result.p_value, label=int(result.p_value <= p0))


def export_labeled_csv(path, cloud: EdgeLabeledCloud) -> None:
    write_csv_points(path, cloud.points, columns={
        "pauly": cloud.pauly,
        "p_value": cloud.p_value,
        "ks_label": cloud.label.astype(np.int64),
    })


def export_labeled_ply(path, cloud: EdgeLabeledCloud) -> None:
    write_ply_points(path, cloud.points, scalars={
        "pauly": cloud.pauly,
        "p_value": cloud.p_value,
        "ks_label": cloud.label.astype(np.float64),
    })
