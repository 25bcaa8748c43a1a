"""Independent test oracles, written against the math rather than the
package internals (brute-force and closed-form implementations only)."""

import numpy as np


def sample_surface_points(mesh, n, seed):
    """Area-weighted uniform points on a mesh surface."""
    rng = np.random.default_rng(seed)
    tri = mesh.triangle_corners()
    areas = 0.5 * np.linalg.norm(
        np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1
    )
    fi = rng.choice(len(tri), size=n, p=areas / areas.sum())
    r1, r2 = rng.random(n), rng.random(n)
    s = np.sqrt(r1)
    b0, b1 = 1 - s, s * (1 - r2)
    b2 = 1 - b0 - b1
    t = tri[fi]
    return b0[:, None] * t[:, 0] + b1[:, None] * t[:, 1] + b2[:, None] * t[:, 2]


def point_to_mesh_distances(points, mesh):
    """Exact point-to-triangle-soup distances (Ericson's closest-point
    construction, vectorized over triangles per query point)."""
    tri = mesh.triangle_corners()
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ab, ac, bc = b - a, c - a, c - b
    out = np.empty(len(points))
    for i, p in enumerate(points):
        ap = p - a
        d1 = np.einsum("ij,ij->i", ab, ap)
        d2 = np.einsum("ij,ij->i", ac, ap)
        bp = p - b
        d3 = np.einsum("ij,ij->i", ab, bp)
        d4 = np.einsum("ij,ij->i", ac, bp)
        cp = p - c
        d5 = np.einsum("ij,ij->i", ab, cp)
        d6 = np.einsum("ij,ij->i", ac, cp)
        va = d3 * d6 - d5 * d4
        vb = d5 * d2 - d1 * d6
        vc = d1 * d4 - d3 * d2
        denom = va + vb + vc
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.nan_to_num(vb / denom)
            w = np.nan_to_num(vc / denom)
        closest = a + v[:, None] * ab + w[:, None] * ac  # face region
        m = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)  # edge bc
        t = np.where((d4 - d3) + (d5 - d6) != 0,
                     (d4 - d3) / ((d4 - d3) + (d5 - d6)), 0.0)
        closest[m] = (b + np.clip(t, 0, 1)[:, None] * bc)[m]
        m = (vb <= 0) & (d2 >= 0) & (d6 <= 0)  # edge ac
        t = np.where(d2 - d6 != 0, d2 / (d2 - d6), 0.0)
        closest[m] = (a + np.clip(t, 0, 1)[:, None] * ac)[m]
        m = (vc <= 0) & (d1 >= 0) & (d3 <= 0)  # edge ab
        t = np.where(d1 - d3 != 0, d1 / (d1 - d3), 0.0)
        closest[m] = (a + np.clip(t, 0, 1)[:, None] * ab)[m]
        m = (d1 <= 0) & (d2 <= 0)  # vertex a
        closest[m] = a[m]
        m = (d3 >= 0) & (d4 <= d3)  # vertex b
        closest[m] = b[m]
        m = (d6 >= 0) & (d5 <= d6)  # vertex c
        closest[m] = c[m]
        out[i] = np.min(np.linalg.norm(p - closest, axis=1))
    return out


def sampled_hausdorff(mesh_a, mesh_b, n=2000, seed=0):
    """Symmetric sampled Hausdorff distance between two surfaces."""
    pa = sample_surface_points(mesh_a, n, seed)
    pb = sample_surface_points(mesh_b, n, seed + 1)
    return max(
        point_to_mesh_distances(pa, mesh_b).max(),
        point_to_mesh_distances(pb, mesh_a).max(),
    )


def random_rays_for_mesh(mesh, n, seed, inflate=0.3):
    """(origins, directions) with origins in the inflated mesh bbox."""
    rng = np.random.default_rng(seed)
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    span = hi - lo
    origins = rng.uniform(lo - inflate * span, hi + inflate * span, (n, 3))
    dirs = rng.normal(size=(n, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return origins, dirs


def ks_statistic(samples, lo, hi):
    """Kolmogorov-Smirnov statistic of samples against U[lo, hi]."""
    x = np.sort((np.asarray(samples) - lo) / (hi - lo))
    n = len(x)
    ecdf_hi = np.arange(1, n + 1) / n
    ecdf_lo = np.arange(0, n) / n
    return max(np.max(ecdf_hi - x), np.max(x - ecdf_lo))
