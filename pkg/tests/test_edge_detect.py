import math

import numpy as np
import pytest

from udfkit import toygen
from udfkit.edge_detect import (
    DetectorConfig,
    EdgeLabeledCloud,
    detect_edges,
    export_labeled_csv,
    export_labeled_ply,
    ks_descriptor,
    odds_ratio_descriptor_2d,
    pauly_descriptor,
)
from udfkit.errors import DegenerateFrameError, InvalidInputError
from udfkit.geometry import KdTree, Neighborhood, knn, normalize_to_unit_ball


def neighborhood_from(points, center=None):
    points = np.asarray(points, dtype=float)
    center = np.zeros(3) if center is None else np.asarray(center, dtype=float)
    d = np.linalg.norm(points - center, axis=1)
    order = np.argsort(d, kind="stable")
    return Neighborhood(center=center, points=points[order],
                        indices=order, distances=d[order])


def toy_neighborhood(kind, psi, seed, k=40, count=500):
    gen = {"cone": toygen.gen_cone, "fold": toygen.gen_fold}[kind]
    cloud = gen(psi, count, seed)
    return knn(KdTree(cloud.points), np.zeros(3), k)


# ---------------------------------------------------------------------------
# Pauly's descriptor


def test_pauly_coplanar_is_zero():
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.normal(size=(40, 2)), np.zeros(40)])
    assert pauly_descriptor(neighborhood_from(pts)) < 1e-9


def test_pauly_isotropic_axes_is_one_third():
    pts = np.vstack([np.eye(3), -np.eye(3)])
    assert pauly_descriptor(neighborhood_from(pts)) == pytest.approx(1.0 / 3.0)


def test_pauly_not_increasing_in_sharpness():
    # the reported failure mode: sharper folds score lower than moderate ones
    sharp = np.median([pauly_descriptor(toy_neighborhood("fold", math.radians(85), s))
                       for s in range(10)])
    moderate = np.median([pauly_descriptor(toy_neighborhood("fold", math.radians(45), s))
                          for s in range(10)])
    assert sharp < moderate


def test_pauly_bounded_by_one_third():
    rng = np.random.default_rng(1)
    for _ in range(50):
        pts = rng.normal(size=(25, 3)) * rng.uniform(0.2, 2.0, 3)
        assert pauly_descriptor(neighborhood_from(pts, rng.normal(size=3) * 0.1)) <= 1 / 3 + 1e-9


def test_pauly_degenerate_rejected():
    pts = np.tile([0.0, 0.0, 0.0], (10, 1))
    nbhd = Neighborhood(center=np.zeros(3), points=pts,
                        indices=np.arange(10), distances=np.zeros(10))
    with pytest.raises(DegenerateFrameError):
        pauly_descriptor(nbhd)


# ---------------------------------------------------------------------------
# KS descriptor


def test_ks_descriptor_quiet_on_centered_planar_disk():
    hits = 0
    for seed in range(200):
        disk = toygen.sample_disk(40, seed)
        pts = np.column_stack([disk, np.zeros(40)])
        desc = ks_descriptor(neighborhood_from(pts), p0=0.2)
        hits += desc.p_value > 0.2
    assert hits >= 190  # quasi-planar: retain the null in >= 95% of trials


def test_ks_descriptor_fires_on_sharp_cone():
    hits = 0
    for seed in range(200):
        desc = ks_descriptor(toy_neighborhood("cone", math.radians(80), seed), p0=0.2)
        hits += desc.p_value < 0.01
    assert hits >= 190


def test_ks_descriptor_rigid_motion_invariant():
    rng = np.random.default_rng(3)
    nbhd = toy_neighborhood("fold", math.radians(70), seed=5)
    base = ks_descriptor(nbhd, p0=0.2)
    # random rotation (QR of a Gaussian matrix) plus translation
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    shift = rng.normal(size=3)
    moved = Neighborhood(center=nbhd.center @ q.T + shift,
                         points=nbhd.points @ q.T + shift,
                         indices=nbhd.indices,
                         distances=nbhd.distances)
    transformed = ks_descriptor(moved, p0=0.2)
    assert transformed.label == base.label
    assert abs(transformed.p_value - base.p_value) < 1e-9


def test_ks_descriptor_insufficient_angles():
    # only four neighbors survive projection: the two off-plane points sit on
    # the e3 axis through the query point and project onto it exactly
    pts = np.array([
        [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0],
        [0.0, 0.0, 1e-9], [0.0, 0.0, -1e-9],
    ])
    nbhd = neighborhood_from(pts)
    desc = ks_descriptor(nbhd, p0=0.2)
    assert desc.p_value == 1.0
    assert desc.label == 0
    assert desc.n_usable == 4


def test_ks_descriptor_requires_min_k():
    pts = np.random.default_rng(0).normal(size=(4, 3))
    with pytest.raises(InvalidInputError):
        ks_descriptor(neighborhood_from(pts))


# ---------------------------------------------------------------------------
# detect_edges


@pytest.fixture(scope="module")
def wedge_labeled():
    mesh = normalize_to_unit_ball(toygen.gen_watertight("wedge"))
    cfg = DetectorConfig(n_s=2000, k=40, p0=0.2, seed=1)
    return mesh, detect_edges(mesh, cfg)


def test_detect_edges_contrast_on_sharp_edge(wedge_labeled):
    # the wedge apex edge (30 degree apex) must be labeled at >= 3x the rate
    # of points far from it
    mesh, labeled = wedge_labeled
    v = mesh.vertices
    apex = v[v[:, 2] > v[:, 2].max() - 1e-9]
    ax, az = apex[0][0], apex[0][2]
    ymin, ymax = apex[:, 1].min(), apex[:, 1].max()
    p = labeled.points
    yc = np.clip(p[:, 1], ymin, ymax)
    dist = np.sqrt((p[:, 0] - ax) ** 2 + (p[:, 2] - az) ** 2 + (p[:, 1] - yc) ** 2)
    near_rate = labeled.label[dist < 0.05].mean()
    far_rate = labeled.label[dist > 0.15].mean()
    assert near_rate >= 3.0 * far_rate


def test_detect_edges_sphere_mostly_unlabeled():
    mesh = normalize_to_unit_ball(toygen.gen_watertight("icosphere", subdivision=3))
    labeled = detect_edges(mesh, DetectorConfig(n_s=2000, k=40, p0=0.2, seed=2))
    assert labeled.label.mean() <= 0.1


def test_detect_edges_deterministic(wedge_labeled):
    mesh, labeled = wedge_labeled
    again = detect_edges(mesh, DetectorConfig(n_s=2000, k=40, p0=0.2, seed=1))
    assert np.array_equal(labeled.label, again.label)
    assert np.array_equal(labeled.points, again.points)
    assert np.array_equal(labeled.p_value, again.p_value)


def test_detect_edges_partition_consistent(wedge_labeled):
    _, labeled = wedge_labeled
    union = np.sort(np.concatenate([labeled.edge_indices, labeled.flat_indices]))
    assert np.array_equal(union, np.arange(labeled.n_s))
    assert np.all(labeled.label[labeled.edge_indices] == 1)
    assert np.all(labeled.label[labeled.flat_indices] == 0)
    assert np.all((labeled.label == 1) == (labeled.p_value <= labeled.p0))


def test_detect_edges_pauly_within_bound(wedge_labeled):
    _, labeled = wedge_labeled
    assert labeled.pauly.max() <= 1 / 3 + 1e-9
    assert labeled.pauly.min() >= 0.0


def test_detector_config_validation():
    with pytest.raises(InvalidInputError):
        DetectorConfig(k=3)
    with pytest.raises(InvalidInputError):
        DetectorConfig(n_s=40, k=40)
    with pytest.raises(InvalidInputError):
        DetectorConfig(p0=1.5)


def test_thin_plate_discrimination():
    # at d = 0.25 the mixed-face neighborhood inflates surface variation while
    # the angle test stays calm (projected angles remain uniform)
    paulys, ps = [], []
    for seed in range(20):
        cloud = toygen.gen_plate(0.25, 500, seed)
        nbhd = knn(KdTree(cloud.points), np.zeros(3), 40)
        paulys.append(pauly_descriptor(nbhd))
        ps.append(ks_descriptor(nbhd, p0=0.2).p_value)
    assert np.median(paulys) > 0.15
    assert np.median(ps) > 0.2


# ---------------------------------------------------------------------------
# odds-ratio descriptor (2D)


def test_odds_ratio_straight_contour():
    cloud = toygen.gen_contour2d(0.0, 50, seed=0)
    desc = odds_ratio_descriptor_2d(np.zeros(2), cloud.points, p0=0.01)
    assert desc.p_value == pytest.approx(1.0)
    assert desc.label == 0


def test_odds_ratio_sharp_contour():
    cloud = toygen.gen_contour2d(math.radians(80), 50, seed=0)
    desc = odds_ratio_descriptor_2d(np.zeros(2), cloud.points, p0=0.01)
    assert desc.p_value < 0.01
    assert desc.label == 1


def test_odds_ratio_mirror_invariant():
    rng = np.random.default_rng(4)
    pts = rng.normal(size=(50, 2)) * [2.0, 0.5] + [0.3, 0.0]
    base = odds_ratio_descriptor_2d(np.zeros(2), pts)
    mirrored = pts * [1.0, -1.0]  # reflect across the dominant axis
    flipped = odds_ratio_descriptor_2d(np.zeros(2), mirrored)
    assert flipped.p_value == pytest.approx(base.p_value, abs=1e-12)


def test_odds_ratio_requires_min_k():
    with pytest.raises(InvalidInputError):
        odds_ratio_descriptor_2d(np.zeros(2), np.eye(2))


# ---------------------------------------------------------------------------
# export


def test_export_labeled_cloud(tmp_path, wedge_labeled):
    _, labeled = wedge_labeled
    csv_path = tmp_path / "labeled.csv"
    ply_path = tmp_path / "labeled.ply"
    export_labeled_csv(csv_path, labeled)
    export_labeled_ply(ply_path, labeled)
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "x,y,z,pauly,p_value,ks_label"
    assert len(lines) == labeled.n_s + 1
    assert "property double ks_label" in ply_path.read_text()
