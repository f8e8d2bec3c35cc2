"""Exact unsigned distance queries against a triangle mesh.

Point-to-triangle distances use the Ericson region classification, evaluated
vectorized over triangle blocks; queries are pruned by a median-split AABB
hierarchy. Everything is float64.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError
from .geometry import TriangleMesh

__all__ = ["closest_point_on_triangles", "UdfOracle"]

_LEAF_SIZE = 8


def closest_point_on_triangles(points, corners) -> np.ndarray:
    """Closest points on triangles, classified per Ericson's regions.

    `points` may be a single (3,) position or an (n, 3) array; `corners` is
    (m, 3, 3). Returns (m, 3) respectively (n, m, 3). Exact up to round-off.
    """
    p = np.asarray(points, dtype=np.float64)
    single = p.ndim == 1
    p = p.reshape(-1, 1, 3)  # (n, 1, 3)
    a = corners[None, :, 0]  # (1, m, 3)
    b = corners[None, :, 1]
    c = corners[None, :, 2]
    ab = b - a
    ac = c - a

    ap = p - a
    d1 = np.einsum("...j,...j->...", ab, ap)
    d2 = np.einsum("...j,...j->...", ac, ap)
    bp = p - b
    d3 = np.einsum("...j,...j->...", ab, bp)
    d4 = np.einsum("...j,...j->...", ac, bp)
    cp = p - c
    d5 = np.einsum("...j,...j->...", ab, cp)
    d6 = np.einsum("...j,...j->...", ac, cp)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    with np.errstate(divide="ignore", invalid="ignore"):
        v_ab = d1 / (d1 - d3)
        w_ac = d2 / (d2 - d6)
        w_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        denom = va + vb + vc
        v_in = vb / denom
        w_in = vc / denom

    # masks applied in reverse of the sequential test order, so the earliest
    # matching region wins, as in the scalar algorithm
    out = a + v_in[..., None] * ab + w_in[..., None] * ac  # interior fallback
    m_bc = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    out = np.where(m_bc[..., None], b + w_bc[..., None] * (c - b), out)
    m_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    out = np.where(m_ac[..., None], a + w_ac[..., None] * ac, out)
    m_c = (d6 >= 0) & (d5 <= d6)
    out = np.where(m_c[..., None], c, out)
    m_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    out = np.where(m_ab[..., None], a + v_ab[..., None] * ab, out)
    m_b = (d3 >= 0) & (d4 <= d3)
    out = np.where(m_b[..., None], b, out)
    m_a = (d1 <= 0) & (d2 <= 0)
    out = np.where(m_a[..., None], a, out)
    return out[0] if single else out


def _point_triangle_dsq_batch(points, corners):
    """Squared distances from (n, 3) points to (m, 3, 3) triangles as (n, m)."""
    closest = closest_point_on_triangles(points, corners)
    diff = closest - points[:, None, :]
    return np.einsum("nmj,nmj->nm", diff, diff)


class _BvhNode:
    __slots__ = ("lo", "hi", "left", "right", "tri_ids")

    def __init__(self, lo, hi, left=None, right=None, tri_ids=None):
        self.lo = lo
        self.hi = hi
        self.left = left
        self.right = right
        self.tri_ids = tri_ids


class UdfOracle:
    """Unsigned distance function of a triangle mesh with exact queries."""

    def __init__(self, mesh: TriangleMesh):
        if mesh.n_triangles == 0:
            raise InvalidInputError("cannot build a UDF oracle on an empty mesh")
        self.mesh = mesh
        self._corners = mesh.triangle_corners()
        lo = self._corners.min(axis=1)
        hi = self._corners.max(axis=1)
        centers = 0.5 * (lo + hi)
        self._root = self._build(np.arange(mesh.n_triangles), lo, hi, centers)

    def _build(self, ids, lo, hi, centers):
        node_lo = lo[ids].min(axis=0)
        node_hi = hi[ids].max(axis=0)
        if len(ids) <= _LEAF_SIZE:
            return _BvhNode(node_lo, node_hi, tri_ids=np.sort(ids))
        axis = int(np.argmax(node_hi - node_lo))
        order = np.argsort(centers[ids, axis], kind="stable")
        mid = len(ids) // 2
        left = self._build(ids[order[:mid]], lo, hi, centers)
        right = self._build(ids[order[mid:]], lo, hi, centers)
        return _BvhNode(node_lo, node_hi, left=left, right=right)

    @staticmethod
    def _box_dist_sq(node, p):
        d = np.maximum(node.lo - p, 0.0) + np.maximum(p - node.hi, 0.0)
        return float(d @ d)

    def udf(self, x):
        """Distance to the surface and the closest surface point."""
        p = np.asarray(x, dtype=np.float64)
        best_sq = np.inf
        best_point = None
        stack = [(0.0, self._root)]
        while stack:
            box_sq, node = stack.pop()
            if box_sq >= best_sq:
                continue
            if node.tri_ids is not None:
                cand = closest_point_on_triangles(p, self._corners[node.tri_ids])
                dsq = ((cand - p) ** 2).sum(axis=1)
                j = int(np.argmin(dsq))
                if dsq[j] < best_sq:
                    best_sq = float(dsq[j])
                    best_point = cand[j]
                continue
            l_sq = self._box_dist_sq(node.left, p)
            r_sq = self._box_dist_sq(node.right, p)
            # push the farther child first so the nearer is explored next
            if l_sq <= r_sq:
                stack.append((r_sq, node.right))
                stack.append((l_sq, node.left))
            else:
                stack.append((l_sq, node.left))
                stack.append((r_sq, node.right))
        return float(np.sqrt(best_sq)), best_point

    def udf_batch(self, xs) -> np.ndarray:
        """Element-wise distances for an (n, 3) array, order preserving.

        Small meshes take a chunked full scan over all triangles (exact, and
        much faster than per-point traversal); larger meshes go through the
        BVH point by point.
        """
        xs = np.asarray(xs, dtype=np.float64).reshape(-1, 3)
        if self.mesh.n_triangles <= 64:
            out = np.empty(len(xs))
            for start in range(0, len(xs), 2048):
                chunk = xs[start:start + 2048]
                dsq = _point_triangle_dsq_batch(chunk, self._corners)
                out[start:start + 2048] = np.sqrt(dsq.min(axis=1))
            return out
        out = np.empty(len(xs))
        for i, p in enumerate(xs):
            out[i], _ = self.udf(p)
        return out

    def udf_brute(self, x):
        """Full scan over all triangles (no BVH pruning); used as a cross-check."""
        p = np.asarray(x, dtype=np.float64)
        cand = closest_point_on_triangles(p, self._corners)
        dsq = ((cand - p) ** 2).sum(axis=1)
        j = int(np.argmin(dsq))
        return float(np.sqrt(dsq[j])), cand[j]
