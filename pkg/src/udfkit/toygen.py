"""Deterministic generators for toy geometries.

Point-cloud toys (cones, folds, thin plates, 2D contour portions) reproduce
the surface-feature archetypes used to compare edge descriptors; their
designated descriptor query point is the origin. Watertight mesh toys (cube,
wedge, icosphere and two sharp-featured variants) feed end-to-end pipeline
experiments.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInputError
from .geometry import PointCloud, TriangleMesh

__all__ = [
    "sample_disk",
    "gen_cone",
    "gen_fold",
    "gen_plate",
    "gen_contour2d",
    "gen_watertight",
    "WATERTIGHT_KINDS",
    "is_closed_manifold",
]


def _check_psi(psi: float) -> float:
    if not 0.0 <= psi < math.pi / 2:
        raise InvalidInputError(f"psi must lie in [0, pi/2), got {psi}")
    return float(psi)


def sample_disk(count: int, seed: int, radius: float = 1.0) -> np.ndarray:
    """Area-uniform points on a disk (sqrt-radius inverse transform)."""
    if count < 1:
        raise InvalidInputError("count must be >= 1")
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.random(count))
    t = rng.random(count) * 2.0 * np.pi
    return np.column_stack([r * np.cos(t), r * np.sin(t)])


def gen_cone(psi: float, count: int, seed: int) -> PointCloud:
    """Disk points rotated by psi about their tangent axis through the origin.

    psi = 0 reproduces the flat disk; psi -> pi/2 closes the cone onto the
    z-axis. The descriptor query point (the apex) is the origin.
    """
    psi = _check_psi(psi)
    disk = sample_disk(count, seed)
    r = np.hypot(disk[:, 0], disk[:, 1])
    az = np.arctan2(disk[:, 1], disk[:, 0])
    # rotating x = r*rhat about that tangent axis keeps the azimuth and norm
    rho = r * math.cos(psi)
    z = r * math.sin(psi)
    pts = np.column_stack([rho * np.cos(az), rho * np.sin(az), z])
    if psi == 0.0:
        pts = np.column_stack([disk, np.zeros(count)])
    return PointCloud(pts)


def gen_fold(psi: float, count: int, seed: int) -> PointCloud:
    """Disk folded along the y-axis: halves rotate by +/-psi about y.

    The dihedral opening angle is pi - 2 psi; the fold line passes through
    the origin, which is the designated query point.
    """
    psi = _check_psi(psi)
    disk = sample_disk(count, seed)
    x, y = disk[:, 0], disk[:, 1]
    theta = np.where(x >= 0.0, psi, -psi)
    pts = np.column_stack([x * np.cos(theta), y, -x * np.sin(theta)])
    if psi == 0.0:
        pts = np.column_stack([disk, np.zeros(count)])
    return PointCloud(pts)


def gen_plate(d: float, count: int, seed: int) -> PointCloud:
    """Two parallel unit disks at z = 0 and z = d (ceil/floor split of count)."""
    if d < 0.0:
        raise InvalidInputError("thickness d must be >= 0")
    n0 = (count + 1) // 2
    n1 = count // 2
    rng_seed0, rng_seed1 = seed, seed + 1
    bottom = sample_disk(n0, rng_seed0)
    top = sample_disk(max(n1, 1), rng_seed1)[:n1]
    pts = np.vstack([
        np.column_stack([bottom, np.zeros(n0)]),
        np.column_stack([top, np.full(n1, float(d))]),
    ])
    return PointCloud(pts, labels=np.concatenate([np.zeros(n0, dtype=np.int64),
                                                  np.ones(n1, dtype=np.int64)]))


def gen_contour2d(psi: float, count: int, seed: int = 0) -> PointCloud:
    """2D contour portion: evenly spaced x in (-1, 1), each point rotated by
    sign(x) * psi about the origin. The query point is the origin.

    The x grid uses cell midpoints, so it is symmetric and never hits 0; the
    seed is accepted for interface uniformity but the output is the same for
    all seeds.
    """
    psi = _check_psi(psi)
    if count < 1:
        raise InvalidInputError("count must be >= 1")
    i = np.arange(1, count + 1)
    x = -1.0 + (2.0 * i - 1.0) / count
    theta = np.where(x >= 0.0, psi, -psi)
    pts = np.column_stack([x * np.cos(theta), x * np.sin(theta)])
    if psi == 0.0:
        pts = np.column_stack([x, np.zeros(count)])
    return PointCloud(pts)


# ---------------------------------------------------------------------------
# watertight meshes

WATERTIGHT_KINDS = ("cube", "wedge", "icosphere", "spiky_icosphere", "fold_prism")


def gen_watertight(kind: str, **params) -> TriangleMesh:
    """Closed 2-manifold toy meshes (Euler characteristic 2).

    kinds: cube, wedge (triangular prism, `apex_angle`), icosphere
    (`subdivision` <= 5), spiky_icosphere (`subdivision`, `spike`),
    fold_prism (chevron prism, `fold_angle`, `thickness`).
    """
    if kind == "cube":
        return _cube()
    if kind == "wedge":
        return _wedge(params.get("apex_angle", math.radians(30.0)))
    if kind == "icosphere":
        return _icosphere(params.get("subdivision", 2))
    if kind == "spiky_icosphere":
        # a long needle: its tip is the dominant reconstruction-error region
        return _spiky_icosphere(params.get("subdivision", 0), params.get("spike", 2.0))
    if kind == "fold_prism":
        # thin strip: the crease and the four rims are all detectable edges
        return _fold_prism(params.get("fold_angle", math.radians(40.0)),
                           params.get("thickness", 0.10))
    raise InvalidInputError(f"unknown watertight kind {kind!r}")


def _cube() -> TriangleMesh:
    corners = np.array([[x, y, z] for x in (-1.0, 1.0) for y in (-1.0, 1.0) for z in (-1.0, 1.0)])
    quads = [
        (0, 1, 3, 2), (4, 6, 7, 5),  # x = -1, x = +1
        (0, 4, 5, 1), (2, 3, 7, 6),  # y = -1, y = +1
        (0, 2, 6, 4), (1, 5, 7, 3),  # z = -1, z = +1
    ]
    tris = []
    for a, b, c, d in quads:
        tris.append((a, b, c))
        tris.append((a, c, d))
    return TriangleMesh(corners, np.array(tris))


def _wedge(apex_angle: float) -> TriangleMesh:
    """Triangular prism whose long top edge has the given apex angle."""
    if not 0.0 < apex_angle < math.pi:
        raise InvalidInputError("apex_angle must lie in (0, pi)")
    h = 1.0
    b = h * math.tan(apex_angle / 2.0)
    # cross-section in xz: apex at (0, h), base corners at (+-b, 0)
    section = [(0.0, h), (-b, 0.0), (b, 0.0)]
    verts = []
    for y in (-1.0, 1.0):
        for x, z in section:
            verts.append((x, y, z))
    tris = [
        (0, 2, 1), (3, 4, 5),  # caps at y = -1, y = +1
        (0, 1, 4), (0, 4, 3),  # side through apex and base corner 1
        (1, 2, 5), (1, 5, 4),  # base
        (2, 0, 3), (2, 3, 5),  # side through base corner 2 and apex
    ]
    return TriangleMesh(np.array(verts), np.array(tris))


def _icosahedron():
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array([
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    tris = np.array([
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ], dtype=np.int64)
    return verts, tris


def _icosphere(subdivision: int) -> TriangleMesh:
    if not 0 <= subdivision <= 5:
        raise InvalidInputError("subdivision must lie in [0, 5]")
    verts, tris = _icosahedron()
    verts = [tuple(v) for v in verts]
    for _ in range(subdivision):
        midpoint = {}
        new_tris = []

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in midpoint:
                m = np.asarray(verts[i]) + np.asarray(verts[j])
                m /= np.linalg.norm(m)
                verts.append(tuple(m))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        for a, b, c in tris:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_tris += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        tris = np.array(new_tris, dtype=np.int64)
    return TriangleMesh(np.array(verts), tris)


def _spiky_icosphere(subdivision: int, spike: float) -> TriangleMesh:
    """Icosphere with one vertex pulled radially outward by `spike`."""
    if spike < 0.0:
        raise InvalidInputError("spike must be >= 0")
    mesh = _icosphere(subdivision)
    verts = mesh.vertices.copy()
    verts[0] = verts[0] * (1.0 + spike)
    return TriangleMesh(verts, mesh.triangles)


def _fold_prism(fold_angle: float, thickness: float) -> TriangleMesh:
    """Prism over a chevron cross-section; the outer crease has the given
    dihedral opening angle."""
    if not 0.0 < fold_angle < math.pi:
        raise InvalidInputError("fold_angle must lie in (0, pi)")
    if thickness <= 0.0:
        raise InvalidInputError("thickness must be > 0")
    alpha = fold_angle / 2.0
    s, c = math.sin(alpha), math.cos(alpha)
    arm = 1.0
    t = thickness
    # hexagon in xz, counter-clockwise: outer V then inner V
    section = [
        (-arm * s, arm * c), (0.0, 0.0), (arm * s, arm * c),
        (arm * s, arm * c + t), (0.0, t), (-arm * s, arm * c + t),
    ]
    verts = []
    for y in (-1.0, 1.0):
        for x, z in section:
            verts.append((x, y, z))
    def cap(base, flip):
        ids = [base + i for i in range(6)]
        tris = [(ids[0], ids[1], ids[4]), (ids[1], ids[2], ids[3]),
                (ids[1], ids[3], ids[4]), (ids[0], ids[4], ids[5])]
        if flip:
            tris = [(a, c_, b) for a, b, c_ in tris]
        return tris
    tris = cap(0, flip=True) + cap(6, flip=False)
    for i in range(6):
        j = (i + 1) % 6
        tris.append((i, j, 6 + j))
        tris.append((i, 6 + j, 6 + i))
    return TriangleMesh(np.array(verts), np.array(tris, dtype=np.int64))


def is_closed_manifold(mesh: TriangleMesh) -> bool:
    """True when every edge is shared by exactly two triangles."""
    edges = {}
    for a, b, c in mesh.triangles:
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            edges[key] = edges.get(key, 0) + 1
    return all(n == 2 for n in edges.values())
