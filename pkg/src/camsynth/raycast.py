"""First-hit ray queries against a triangle mesh.

A median-split BVH accelerates queries; a vectorized numpy linear scan
over all triangles is provided as an independent oracle for testing.
Both use the Moller-Trumbore triangle test with the same epsilon policy
(two-sided, no backface culling; scan meshes have inconsistent winding).

Determinism guarantees:
* BVH construction is deterministic for a given mesh (median split on
  the longest centroid axis, stable ordering).
* When two triangles are hit at exactly equal t, the lowest triangle id
  wins.
* Hits closer than EPS_SELF = 1e-5 m are ignored (self-intersection
  guard for poses sitting exactly on interpolated paths).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .mesh_io import TexturedMesh
from .pose_math import Pose6D, forward_direction

EPS_SELF = 1e-5
_BOX_INFLATE = 1e-7
_BARY_EPS = 1e-9
_LEAF_SIZE = 4


class RaycastError(ValueError):
    pass


@dataclass(frozen=True)
class Ray:
    """origin (m), unit direction, optional max distance."""

    origin: np.ndarray
    direction: np.ndarray
    t_max: float = np.inf

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=np.float64)
        d = np.asarray(self.direction, dtype=np.float64)
        if o.shape != (3,) or d.shape != (3,):
            raise RaycastError("origin/direction must be 3-vectors")
        n = np.linalg.norm(d)
        if abs(n - 1.0) > 1e-9:
            raise RaycastError(f"direction norm {n} != 1")
        if not self.t_max > 0:
            raise RaycastError("t_max must be positive")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class HitRecord:
    """First intersection: distance, triangle id, barycentrics, point."""

    t: float
    triangle: int
    u: float
    v: float
    point: np.ndarray


@dataclass(frozen=True)
class BvhIndex:
    """Flattened BVH over a triangle soup.

    Nodes: inner nodes store child indices in (left, right); leaves have
    left == -1 and reference tri_order[first:first+count].
    p0/e1/e2 are the permuted triangle bases/edges used by traversal.
    """

    node_min: np.ndarray
    node_max: np.ndarray
    left: np.ndarray
    right: np.ndarray
    first: np.ndarray
    count: np.ndarray
    tri_order: np.ndarray
    p0: np.ndarray
    e1: np.ndarray
    e2: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.left)


def build_bvh(mesh: TexturedMesh, leaf_size: int = _LEAF_SIZE) -> BvhIndex:
    """Build a deterministic median-split BVH for the mesh."""
    if mesh.n_faces == 0:
        raise RaycastError("cannot build a BVH over an empty mesh")
    tri = mesh.triangle_corners()
    tri_min = tri.min(axis=1) - _BOX_INFLATE
    tri_max = tri.max(axis=1) + _BOX_INFLATE
    centroids = tri.mean(axis=1)

    node_min, node_max = [], []
    left, right, first, count = [], [], [], []
    order = np.arange(mesh.n_faces)

    # stack of (start, end, node_index); children appended after parent
    def new_node():
        node_min.append(None)
        node_max.append(None)
        left.append(-1)
        right.append(-1)
        first.append(0)
        count.append(0)
        return len(left) - 1

    root = new_node()
    stack = [(0, mesh.n_faces, root)]
    while stack:
        start, end, node = stack.pop()
        idx = order[start:end]
        node_min[node] = tri_min[idx].min(axis=0)
        node_max[node] = tri_max[idx].max(axis=0)
        if end - start <= leaf_size:
            first[node] = start
            count[node] = end - start
            continue
        cmin = centroids[idx].min(axis=0)
        cmax = centroids[idx].max(axis=0)
        axis = int(np.argmax(cmax - cmin))
        if cmax[axis] - cmin[axis] <= 0:
            # all centroids coincide; make a leaf
            first[node] = start
            count[node] = end - start
            continue
        # stable sort keeps ordering deterministic under ties
        key = centroids[idx, axis]
        perm = np.argsort(key, kind="stable")
        order[start:end] = idx[perm]
        mid = start + (end - start) // 2
        lc, rc = new_node(), new_node()
        left[node], right[node] = lc, rc
        stack.append((start, mid, lc))
        stack.append((mid, end, rc))

    p0 = np.ascontiguousarray(tri[order, 0])
    e1 = np.ascontiguousarray(tri[order, 1] - tri[order, 0])
    e2 = np.ascontiguousarray(tri[order, 2] - tri[order, 0])
    return BvhIndex(
        node_min=np.ascontiguousarray(np.array(node_min)),
        node_max=np.ascontiguousarray(np.array(node_max)),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        first=np.array(first, dtype=np.int64),
        count=np.array(count, dtype=np.int64),
        tri_order=np.ascontiguousarray(order),
        p0=p0,
        e1=e1,
        e2=e2,
    )


@njit(cache=True, fastmath=False)
def _traverse(node_min, node_max, left, right, first, count, tri_order,
              p0, e1, e2, ox, oy, oz, dx, dy, dz, t_max, t_min):
    """Closest-hit BVH traversal. Returns (t, tri_id, u, v); tri_id = -1
    on miss. Ties at equal t resolve to the lowest triangle id."""
    # huge-but-finite inverses avoid 0*inf = nan in the slab test
    inv_x = 1.0 / dx if abs(dx) > 1e-30 else 1e30
    inv_y = 1.0 / dy if abs(dy) > 1e-30 else 1e30
    inv_z = 1.0 / dz if abs(dz) > 1e-30 else 1e30

    best_t = t_max
    best_id = -1
    best_u = 0.0
    best_v = 0.0

    stack = np.empty(128, dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    while top > 0:
        top -= 1
        node = stack[top]

        # slab test against current best
        tx1 = (node_min[node, 0] - ox) * inv_x
        tx2 = (node_max[node, 0] - ox) * inv_x
        tn = min(tx1, tx2)
        tf = max(tx1, tx2)
        ty1 = (node_min[node, 1] - oy) * inv_y
        ty2 = (node_max[node, 1] - oy) * inv_y
        tn = max(tn, min(ty1, ty2))
        tf = min(tf, max(ty1, ty2))
        tz1 = (node_min[node, 2] - oz) * inv_z
        tz2 = (node_max[node, 2] - oz) * inv_z
        tn = max(tn, min(tz1, tz2))
        tf = min(tf, max(tz1, tz2))
        if tn > tf or tf < 0.0 or tn > best_t:
            continue

        if left[node] < 0:
            lo = first[node]
            hi = lo + count[node]
            for k in range(lo, hi):
                ax, ay, az = p0[k, 0], p0[k, 1], p0[k, 2]
                e1x, e1y, e1z = e1[k, 0], e1[k, 1], e1[k, 2]
                e2x, e2y, e2z = e2[k, 0], e2[k, 1], e2[k, 2]
                # Moller-Trumbore
                px = dy * e2z - dz * e2y
                py = dz * e2x - dx * e2z
                pz = dx * e2y - dy * e2x
                det = e1x * px + e1y * py + e1z * pz
                if det > -1e-14 and det < 1e-14:
                    continue
                inv_det = 1.0 / det
                tx = ox - ax
                ty = oy - ay
                tz = oz - az
                u = (tx * px + ty * py + tz * pz) * inv_det
                if u < -_BARY_EPS or u > 1.0 + _BARY_EPS:
                    continue
                qx = ty * e1z - tz * e1y
                qy = tz * e1x - tx * e1z
                qz = tx * e1y - ty * e1x
                v = (dx * qx + dy * qy + dz * qz) * inv_det
                if v < -_BARY_EPS or u + v > 1.0 + _BARY_EPS:
                    continue
                t = (e2x * qx + e2y * qy + e2z * qz) * inv_det
                if t < t_min or t > best_t:
                    continue
                tid = tri_order[k]
                if t < best_t or tid < best_id:
                    best_t = t
                    best_id = tid
                    best_u = u
                    best_v = v
        else:
            stack[top] = left[node]
            top += 1
            stack[top] = right[node]
            top += 1

    if best_id < 0:
        return math.inf, -1, 0.0, 0.0
    return best_t, best_id, best_u, best_v


def first_hit(bvh: BvhIndex | None, mesh: TexturedMesh | None,
              ray: Ray) -> HitRecord | None:
    """Nearest intersection of ray with the mesh, or None on miss.

    bvh=None models a scene with no geometry: every ray misses.
    """
    if bvh is None:
        return None
    t, tid, u, v = _traverse(
        bvh.node_min, bvh.node_max, bvh.left, bvh.right, bvh.first,
        bvh.count, bvh.tri_order, bvh.p0, bvh.e1, bvh.e2,
        ray.origin[0], ray.origin[1], ray.origin[2],
        ray.direction[0], ray.direction[1], ray.direction[2],
        float(ray.t_max), EPS_SELF,
    )
    if tid < 0:
        return None
    return HitRecord(
        t=t, triangle=int(tid), u=float(u), v=float(v),
        point=ray.origin + t * ray.direction,
    )


def brute_force_first_hit(mesh: TexturedMesh, ray: Ray) -> HitRecord | None:
    """Oracle: linear Moller-Trumbore scan over every triangle (numpy)."""
    tri = mesh.triangle_corners()
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    d = ray.direction
    p = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_det = 1.0 / det
        tvec = ray.origin - tri[:, 0]
        u = np.einsum("ij,ij->i", tvec, p) * inv_det
        q = np.cross(tvec, e1)
        v = (q @ d) * inv_det
        t = np.einsum("ij,ij->i", e2, q) * inv_det
        u = np.nan_to_num(u, nan=-1.0, posinf=-1.0, neginf=-1.0)
        v = np.nan_to_num(v, nan=-1.0, posinf=-1.0, neginf=-1.0)
        t = np.nan_to_num(t, nan=-1.0, posinf=-1.0, neginf=-1.0)
        valid = (
            (np.abs(det) >= 1e-14)
            & (u >= -_BARY_EPS)
            & (u <= 1.0 + _BARY_EPS)
            & (v >= -_BARY_EPS)
            & (u + v <= 1.0 + _BARY_EPS)
            & (t >= EPS_SELF)
            & (t <= ray.t_max)
        )
    if not valid.any():
        return None
    t_masked = np.where(valid, t, np.inf)
    tid = int(np.argmin(t_masked))  # argmin picks the lowest id on ties
    return HitRecord(
        t=float(t[tid]), triangle=tid, u=float(u[tid]), v=float(v[tid]),
        point=ray.origin + t[tid] * d,
    )


def distance_between_poses_ray(bvh: BvhIndex | None, mesh: TexturedMesh | None,
                               src: Pose6D, dst: Pose6D) -> float:
    """Distance to the first surface on the ray from src toward dst
    (infinite t_max; inf on miss)."""
    delta = dst.position - src.position
    dist = float(np.linalg.norm(delta))
    if dist <= 1e-9:
        raise RaycastError("poses are coincident in position")
    hit = first_hit(bvh, mesh, Ray(src.position, delta / dist))
    return hit.t if hit is not None else math.inf


def viewpoint_clearance(bvh: BvhIndex | None, mesh: TexturedMesh | None,
                        p: Pose6D) -> float:
    """Forward distance from p to the nearest surface (inf on miss)."""
    hit = first_hit(bvh, mesh, Ray(p.position, forward_direction(p)))
    return hit.t if hit is not None else math.inf
