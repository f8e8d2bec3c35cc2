"""Meshes, point clouds, spatial indexing, surface sampling and local frames.

Positions are float64 throughout. All functions are pure: inputs are never
mutated, and every randomized operation takes an explicit seed.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFrameError, InvalidInputError, MeshFormatError

__all__ = [
    "TriangleMesh",
    "PointCloud",
    "MeshLoadReport",
    "load_mesh",
    "load_mesh_with_report",
    "write_obj",
    "write_ply_points",
    "write_csv_points",
    "normalize_to_unit_ball",
    "sample_surface_uniform",
    "KdTree",
    "Neighborhood",
    "knn",
    "jacobi_eigh",
    "LocalFrame",
    "local_frame",
    "project_to_average_plane",
]


# ---------------------------------------------------------------------------
# core containers


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle mesh with cached per-triangle areas."""

    vertices: np.ndarray  # (nv, 3) float64
    triangles: np.ndarray  # (nt, 3) int64
    areas: np.ndarray = field(default=None, repr=False)  # (nt,) float64

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        t = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise InvalidInputError(f"vertices must be (n, 3), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3:
            raise InvalidInputError(f"triangles must be (m, 3), got {t.shape}")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise InvalidInputError("triangle index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "areas", _triangle_areas(v, t))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def triangle_corners(self) -> np.ndarray:
        """Corner positions as an (nt, 3, 3) array."""
        return self.vertices[self.triangles]


@dataclass(frozen=True)
class PointCloud:
    """A set of 3D (or 2D) points with optional integer labels."""

    points: np.ndarray
    labels: np.ndarray = None

    def __post_init__(self):
        p = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        if p.ndim != 2 or p.shape[1] not in (2, 3):
            raise InvalidInputError(f"points must be (n, 2) or (n, 3), got {p.shape}")
        if len(p) == 0:
            raise InvalidInputError("point cloud is empty")
        object.__setattr__(self, "points", p)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int64)
            if lab.shape != (len(p),):
                raise InvalidInputError("labels must be one integer per point")
            object.__setattr__(self, "labels", lab)

    def __len__(self) -> int:
        return len(self.points)


def _triangle_areas(vertices, triangles):
    if len(triangles) == 0:
        return np.zeros(0)
    c = vertices[triangles]
    cross = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


# ---------------------------------------------------------------------------
# mesh I/O (ASCII OBJ, ASCII / binary-little-endian PLY)


@dataclass
class MeshLoadReport:
    n_faces_read: int = 0
    n_dropped_degenerate: int = 0  # repeated index or zero area


def load_mesh(path, fmt: str | None = None) -> TriangleMesh:
    """Load a triangle mesh, dropping degenerate faces."""
    mesh, _ = load_mesh_with_report(path, fmt)
    return mesh


def load_mesh_with_report(path, fmt: str | None = None):
    path = str(path)
    if fmt is None:
        fmt = "ply" if path.lower().endswith(".ply") else "obj"
    if fmt == "obj":
        vertices, faces = _read_obj(path)
    elif fmt == "ply":
        vertices, faces = _read_ply(path)
    else:
        raise InvalidInputError(f"unsupported mesh format: {fmt!r}")

    report = MeshLoadReport(n_faces_read=len(faces))
    if len(vertices) == 0:
        raise InvalidInputError(f"{path}: mesh has no vertices")
    vertices = np.asarray(vertices, dtype=np.float64)

    kept = []
    for f in faces:
        if len(set(f)) < 3:
            report.n_dropped_degenerate += 1
            continue
        kept.append(f)
    tris = np.asarray(kept, dtype=np.int64).reshape(-1, 3)
    if tris.size and (tris.min() < 0 or tris.max() >= len(vertices)):
        raise MeshFormatError(f"{path}: face references a missing vertex")
    areas = _triangle_areas(vertices, tris)
    nonzero = areas > 0.0
    report.n_dropped_degenerate += int((~nonzero).sum())
    tris = tris[nonzero]
    if len(tris) == 0:
        raise InvalidInputError(f"{path}: mesh has no non-degenerate triangles")
    return TriangleMesh(vertices, tris), report


def _read_obj(path):
    vertices, faces = [], []
    with open(path, "r", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise MeshFormatError(f"{path}:{lineno}: vertex needs 3 coordinates")
                try:
                    vertices.append([float(x) for x in parts[1:4]])
                except ValueError as exc:
                    raise MeshFormatError(f"{path}:{lineno}: bad vertex: {exc}") from exc
            elif tag == "f":
                if len(parts) < 4:
                    raise MeshFormatError(f"{path}:{lineno}: face needs at least 3 indices")
                idx = []
                for token in parts[1:]:
                    try:
                        raw = int(token.split("/")[0])
                    except ValueError as exc:
                        raise MeshFormatError(f"{path}:{lineno}: bad face index {token!r}") from exc
                    # OBJ indices are 1-based; negative indices count from the end
                    idx.append(raw - 1 if raw > 0 else len(vertices) + raw)
                # fan-triangulate polygons
                for a, b in zip(idx[1:-1], idx[2:]):
                    faces.append((idx[0], a, b))
    return vertices, faces


_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


def _read_ply(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"ply"):
        raise MeshFormatError(f"{path}: missing 'ply' magic")
    header_end = data.find(b"end_header")
    if header_end < 0:
        raise MeshFormatError(f"{path}: no end_header")
    header_end = data.index(b"\n", header_end) + 1
    header = data[:header_end].decode("ascii", errors="replace").splitlines()

    fmt = None
    elements = []  # (name, count, [(prop_kind, dtype..., name)])
    for lineno, line in enumerate(header, start=1):
        parts = line.split()
        if not parts or parts[0] in ("ply", "comment", "obj_info", "end_header"):
            continue
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise MeshFormatError(f"{path}:{lineno}: property before element")
            if parts[1] == "list":
                elements[-1][2].append(("list", _PLY_TYPES[parts[2]], _PLY_TYPES[parts[3]], parts[4]))
            else:
                elements[-1][2].append(("scalar", _PLY_TYPES[parts[1]], parts[1], parts[-1]))
    if fmt not in ("ascii", "binary_little_endian"):
        raise MeshFormatError(f"{path}: unsupported PLY format {fmt!r}")

    body = data[header_end:]
    vertices, faces = [], []
    if fmt == "ascii":
        tokens = body.decode("ascii", errors="replace").split()
        pos = 0
        for name, count, props in elements:
            for _ in range(count):
                row = {}
                for prop in props:
                    if prop[0] == "list":
                        n = int(tokens[pos]); pos += 1
                        row[prop[3]] = [int(tokens[pos + j]) for j in range(n)]
                        pos += n
                    else:
                        row[prop[3]] = float(tokens[pos]); pos += 1
                _ply_collect(name, row, vertices, faces)
    else:
        offset = 0
        for name, count, props in elements:
            for _ in range(count):
                row = {}
                for prop in props:
                    if prop[0] == "list":
                        cnt_dt = np.dtype("<" + prop[1])
                        n = int(np.frombuffer(body, cnt_dt, 1, offset)[0])
                        offset += cnt_dt.itemsize
                        val_dt = np.dtype("<" + prop[2])
                        row[prop[3]] = np.frombuffer(body, val_dt, n, offset).tolist()
                        offset += val_dt.itemsize * n
                    else:
                        dt = np.dtype("<" + prop[1])
                        row[prop[3]] = float(np.frombuffer(body, dt, 1, offset)[0])
                        offset += dt.itemsize
                _ply_collect(name, row, vertices, faces)
    return vertices, faces


def _ply_collect(element_name, row, vertices, faces):
    if element_name == "vertex":
        vertices.append([row["x"], row["y"], row["z"]])
    elif element_name == "face":
        idx = [int(i) for i in next(iter(row.values()))]
        for a, b in zip(idx[1:-1], idx[2:]):
            faces.append((idx[0], a, b))


def write_obj(path, mesh: TriangleMesh) -> None:
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def write_ply_points(path, points: np.ndarray, scalars: dict | None = None) -> None:
    """Write a point cloud as ASCII PLY with optional per-vertex scalar columns."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 3:
        raise InvalidInputError("points must be (n, 3)")
    scalars = scalars or {}
    for name, col in scalars.items():
        if len(col) != len(points):
            raise InvalidInputError(f"scalar column {name!r} length mismatch")
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {len(points)}\n")
        fh.write("property double x\nproperty double y\nproperty double z\n")
        for name in scalars:
            fh.write(f"property double {name}\n")
        fh.write("end_header\n")
        cols = [points[:, 0], points[:, 1], points[:, 2]] + [np.asarray(c, float) for c in scalars.values()]
        for row in zip(*cols):
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def write_csv_points(path, points: np.ndarray, columns: dict | None = None,
                     header: tuple = ("x", "y", "z")) -> None:
    """Write `x,y,z[,extra...]` rows; `columns` maps name -> per-point values."""
    points = np.asarray(points, dtype=np.float64)
    columns = columns or {}
    names = list(header[: points.shape[1]]) + list(columns)
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        extra = [np.asarray(c) for c in columns.values()]
        for i in range(len(points)):
            cells = [repr(float(x)) for x in points[i]]
            for col in extra:
                v = col[i]
                cells.append(str(int(v)) if np.issubdtype(col.dtype, np.integer) else repr(float(v)))
            fh.write(",".join(cells) + "\n")


# ---------------------------------------------------------------------------
# normalization and surface sampling


def normalize_to_unit_ball(mesh: TriangleMesh) -> TriangleMesh:
    """Translate to the vertex centroid and scale so the max vertex norm is 1."""
    v = mesh.vertices - mesh.vertices.mean(axis=0)
    radius = np.linalg.norm(v, axis=1).max()
    if radius <= 0.0:
        raise InvalidInputError("all vertices coincide; cannot normalize")
    v = v / radius
    # guard against round-off pushing the extreme vertex past norm 1
    for _ in range(3):
        m = np.linalg.norm(v, axis=1).max()
        if m <= 1.0:
            break
        v = v / m
    return TriangleMesh(v, mesh.triangles)


def sample_surface_uniform(mesh: TriangleMesh, n: int, seed: int) -> PointCloud:
    """Sample n points area-uniformly on the mesh surface (deterministic per seed)."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    total = mesh.areas.sum()
    if total <= 0:
        raise InvalidInputError("mesh has zero total area")
    rng = np.random.default_rng(seed)
    tri = rng.choice(mesh.n_triangles, size=n, p=mesh.areas / total)
    corners = mesh.vertices[mesh.triangles[tri]]
    # sqrt trick gives the uniform density on each triangle
    r1 = np.sqrt(rng.random(n))
    r2 = rng.random(n)
    a = 1.0 - r1
    b = r1 * (1.0 - r2)
    c = r1 * r2
    pts = (a[:, None] * corners[:, 0] + b[:, None] * corners[:, 1] + c[:, None] * corners[:, 2])
    return PointCloud(pts, labels=tri)


# ---------------------------------------------------------------------------
# k-d tree and neighborhoods


class KdTree:
    """Static balanced k-d tree over a fixed point set.

    Queries are exact; equal distances are resolved toward the smaller point
    index so results are reproducible.
    """

    _LEAF = 16

    def __init__(self, points: np.ndarray):
        pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
        if pts.ndim != 2:
            raise InvalidInputError("points must be 2-dimensional")
        if len(pts) == 0:
            raise InvalidInputError("cannot index an empty point set")
        self.points = pts
        self.dim = pts.shape[1]
        # nodes: (axis, split, left, right) with leaf sentinel axis == -1
        self._nodes = []
        self._leaf_idx = []
        order = np.arange(len(pts))
        self._root = self._build(order, 0)

    def __len__(self):
        return len(self.points)

    def _build(self, idx, depth):
        if len(idx) <= self._LEAF:
            self._leaf_idx.append(np.sort(idx))
            self._nodes.append((-1, float(len(self._leaf_idx) - 1), -1, -1))
            return len(self._nodes) - 1
        axis = depth % self.dim
        coords = self.points[idx, axis]
        mid = len(idx) // 2
        part = np.argpartition(coords, mid)
        split = float(coords[part[mid]])
        left = idx[part[:mid]]
        right = idx[part[mid:]]
        node_id = len(self._nodes)
        self._nodes.append(None)
        l = self._build(left, depth + 1)
        r = self._build(right, depth + 1)
        self._nodes[node_id] = (axis, split, l, r)
        return node_id

    def query(self, point, k: int, exclude_self: bool = False):
        """Return (indices, distances) of the k nearest points.

        With exclude_self=True one zero-distance point (the query itself, when
        it is a member of the indexed set) is skipped.
        """
        point = np.asarray(point, dtype=np.float64)
        avail = len(self.points) - (1 if exclude_self else 0)
        if k < 1 or k > avail:
            raise InvalidInputError(f"k={k} exceeds available points ({avail})")
        # max-heap on (dist_sq, index): store negated so heap[0] is the worst
        heap = []
        skipped_self = [not exclude_self]
        pts = self.points

        def visit_leaf(leaf_id):
            for j in self._leaf_idx[leaf_id]:
                diff = pts[j] - point
                dsq = float(diff @ diff)
                if not skipped_self[0] and dsq == 0.0:
                    skipped_self[0] = True
                    continue
                entry = (-dsq, -j)
                if len(heap) < k:
                    heapq.heappush(heap, entry)
                elif entry > heap[0]:
                    heapq.heapreplace(heap, entry)

        stack = [(self._root, 0.0)]
        while stack:
            node_id, min_dsq = stack.pop()
            if len(heap) == k and min_dsq > -heap[0][0]:
                continue
            axis, split, l, r = self._nodes[node_id]
            if axis < 0:
                visit_leaf(int(split))
                continue
            delta = point[axis] - split
            near, far = (r, l) if delta >= 0 else (l, r)
            far_dsq = max(min_dsq, delta * delta)
            stack.append((far, far_dsq))
            stack.append((near, min_dsq))

        out = sorted((-d, -j) for d, j in heap)
        idx = np.array([j for _, j in out], dtype=np.int64)
        dist = np.sqrt(np.array([d for d, _ in out]))
        return idx, dist

    def nearest_distances(self, queries: np.ndarray) -> np.ndarray:
        """Distance from each query point to its nearest indexed point."""
        queries = np.asarray(queries, dtype=np.float64)
        out = np.empty(len(queries))
        for i, q in enumerate(queries):
            _, d = self.query(q, 1)
            out[i] = d[0]
        return out


@dataclass(frozen=True)
class Neighborhood:
    """A query point and its k nearest neighbors, sorted by distance."""

    center: np.ndarray  # (3,)
    points: np.ndarray  # (k, d)
    indices: np.ndarray  # (k,)
    distances: np.ndarray  # (k,)

    @property
    def k(self) -> int:
        return len(self.points)


def knn(index: KdTree, query, k: int, exclude_self: bool = False) -> Neighborhood:
    """Exact k nearest neighbors of `query` in the indexed set."""
    query = np.asarray(query, dtype=np.float64)
    idx, dist = index.query(query, k, exclude_self=exclude_self)
    return Neighborhood(center=query, points=index.points[idx], indices=idx, distances=dist)


# ---------------------------------------------------------------------------
# local covariance frames


def jacobi_eigh(matrix: np.ndarray, max_sweeps: int = 32, tol: float = 1e-12):
    """Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) sorted by decreasing eigenvalue,
    eigenvectors in columns. Deterministic; convergence is checked against
    `tol` relative to the Frobenius norm.
    """
    a = np.array(matrix, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n):
        raise InvalidInputError("matrix must be square")
    v = np.eye(n)
    fro = np.linalg.norm(a)
    threshold = tol * max(fro, 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(max(0.0, np.sum(a**2) - np.sum(np.diag(a) ** 2)))
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= threshold / (n * n):
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def _fix_eigenvector_signs(vectors: np.ndarray) -> np.ndarray:
    """Make each column's largest-magnitude component positive (first on tie)."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        i = int(np.argmax(np.abs(col)))  # argmax returns the first maximal entry
        if col[i] < 0:
            out[:, j] = -col
    return out


@dataclass(frozen=True)
class LocalFrame:
    """Barycenter plus eigen-structure of a neighborhood covariance."""

    mean: np.ndarray  # (d,)
    eigenvalues: np.ndarray  # (d,) descending, >= 0
    eigenvectors: np.ndarray  # (d, d) columns, orthonormal


def covariance_frame(points: np.ndarray) -> LocalFrame:
    """Covariance frame of a point set with the 1/N divisor (N = row count)."""
    pts = np.asarray(points, dtype=np.float64)
    mean = pts.mean(axis=0)
    q = pts - mean
    cov = q.T @ q / len(pts)
    if np.trace(cov) <= 0.0:
        raise DegenerateFrameError("all points coincide; covariance is zero")
    w, v = jacobi_eigh(cov)
    w = np.maximum(w, 0.0)  # clamp round-off negatives
    v = _fix_eigenvector_signs(v)
    return LocalFrame(mean=mean, eigenvalues=w, eigenvectors=v)


def local_frame(nbhd: Neighborhood) -> LocalFrame:
    """Frame of the k+1 points {x0, x1..xk}; covariance divisor is k+1."""
    if nbhd.k < 3:
        raise InvalidInputError("need at least 3 neighbors for a local frame")
    pts = np.vstack([nbhd.center[None, :], nbhd.points])
    return covariance_frame(pts)


def project_to_average_plane(nbhd: Neighborhood, frame: LocalFrame) -> np.ndarray:
    """Project x0..xk onto the top-two eigenvector plane; row 0 is x0'."""
    if frame.eigenvalues[0] <= 0.0:
        raise DegenerateFrameError("average plane undefined for a rank-0 frame")
    e1 = frame.eigenvectors[:, 0]
    e2 = frame.eigenvectors[:, 1]
    pts = np.vstack([nbhd.center[None, :], nbhd.points])
    return np.column_stack([pts @ e1, pts @ e2])
