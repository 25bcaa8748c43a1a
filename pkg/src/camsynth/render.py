"""Deterministic software renderer for textured meshes.

Pinhole projection, z-buffered triangle rasterization with perspective
correct UV interpolation, bilinear clamp-to-edge texture sampling, no
lighting (the texture already bakes real-world appearance). Output is
bit-exact for identical inputs: triangles rasterize sequentially in a
fixed order and the z test is strict (first triangle wins exact ties).

Frames: poses use the body frame (x forward, z up) from pose_math; the
camera optical frame is z forward, x right, y down. The fixed rotation
between them is R_BODY_FROM_OPTICAL below.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .mesh_io import TexturedMesh
from .pose_math import Pose6D, euler_to_rotation

# columns are the optical x (right = -y_body), y (down = -z_body),
# z (forward = +x_body) axes expressed in the body frame
R_BODY_FROM_OPTICAL = np.array(
    [[0.0, 0.0, 1.0],
     [-1.0, 0.0, 0.0],
     [0.0, -1.0, 0.0]]
)


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole model: focal lengths and principal point in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    near: float = 0.05
    far: float = 100.0

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise RenderError("focal lengths must be positive")
        if not 0 < self.near < self.far:
            raise RenderError("need 0 < near < far")
        if self.width < 1 or self.height < 1:
            raise RenderError("resolution must be >= 1x1")

    def scaled(self, factor: float) -> "CameraIntrinsics":
        """Same field of view at factor x resolution."""
        return CameraIntrinsics(
            fx=self.fx * factor, fy=self.fy * factor,
            cx=self.cx * factor, cy=self.cy * factor,
            width=int(round(self.width * factor)),
            height=int(round(self.height * factor)),
            near=self.near, far=self.far,
        )


def camera_to_world_optical(pose: Pose6D) -> tuple[np.ndarray, np.ndarray]:
    """(R, t): optical-frame camera-to-world rotation and position."""
    return euler_to_rotation(pose) @ R_BODY_FROM_OPTICAL, pose.position


def camera_pose_matrix(pose: Pose6D) -> np.ndarray:
    """4x4 camera-to-world transform of the OPTICAL frame (z forward,
    x right, y down) — the convention written to dataset pose files."""
    r, t = camera_to_world_optical(pose)
    m = np.eye(4)
    m[:3, :3] = r
    m[:3, 3] = t
    return m


def project_point(intr: CameraIntrinsics, pose: Pose6D, world_point):
    """Pinhole projection of one world point: (u, v, z) in pixels and
    meters, or None if the point is at or behind the near plane.

    Kept deliberately scalar and explicit; render() uses a separate
    vectorized matrix path, and tests cross-check the two.
    """
    px, py, pz = (float(c) for c in np.asarray(world_point, dtype=float))
    r, t = camera_to_world_optical(pose)
    dx, dy, dz = px - t[0], py - t[1], pz - t[2]
    # world -> optical is the transpose (columns become rows)
    x = r[0, 0] * dx + r[1, 0] * dy + r[2, 0] * dz
    y = r[0, 1] * dx + r[1, 1] * dy + r[2, 1] * dz
    z = r[0, 2] * dx + r[1, 2] * dy + r[2, 2] * dz
    if z <= intr.near:
        return None
    u = intr.fx * x / z + intr.cx
    v = intr.fy * y / z + intr.cy
    return (u, v, z)


@njit(cache=True, fastmath=False)
def _rasterize(sx, sy, invz, uoz, voz, tex, color, zbuf, far):
    """Sequentially rasterize screen-space triangles into color/zbuf.

    sx/sy: (k,3) pixel coordinates; invz: (k,3) 1/z; uoz/voz: (k,3)
    u/z, v/z texture coordinates. Pixel (ix, iy) is sampled at its
    center (ix+0.5, iy+0.5). Two-sided (winding-agnostic) coverage.
    """
    height = color.shape[0]
    width = color.shape[1]
    tex_h = tex.shape[0]
    tex_w = tex.shape[1]
    for k in range(sx.shape[0]):
        x0, x1, x2 = sx[k, 0], sx[k, 1], sx[k, 2]
        y0, y1, y2 = sy[k, 0], sy[k, 1], sy[k, 2]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        sign = 1.0 if area > 0.0 else -1.0
        inv_area = 1.0 / abs(area)

        xmin = min(x0, min(x1, x2))
        xmax = max(x0, max(x1, x2))
        ymin = min(y0, min(y1, y2))
        ymax = max(y0, max(y1, y2))
        ix_lo = max(0, int(np.ceil(xmin - 0.5)))
        ix_hi = min(width - 1, int(np.floor(xmax - 0.5)))
        iy_lo = max(0, int(np.ceil(ymin - 0.5)))
        iy_hi = min(height - 1, int(np.floor(ymax - 0.5)))
        if ix_lo > ix_hi or iy_lo > iy_hi:
            continue

        iz0, iz1, iz2 = invz[k, 0], invz[k, 1], invz[k, 2]
        u0, u1, u2 = uoz[k, 0], uoz[k, 1], uoz[k, 2]
        v0, v1, v2 = voz[k, 0], voz[k, 1], voz[k, 2]

        for iy in range(iy_lo, iy_hi + 1):
            py = iy + 0.5
            for ix in range(ix_lo, ix_hi + 1):
                px = ix + 0.5
                w0 = ((x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)) * sign
                if w0 < 0.0:
                    continue
                w1 = ((x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)) * sign
                if w1 < 0.0:
                    continue
                w2 = ((x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)) * sign
                if w2 < 0.0:
                    continue
                b0 = w0 * inv_area
                b1 = w1 * inv_area
                b2 = w2 * inv_area
                inv_z = b0 * iz0 + b1 * iz1 + b2 * iz2
                if inv_z <= 0.0:
                    continue
                z = 1.0 / inv_z
                if z > far or z >= zbuf[iy, ix]:
                    continue
                u = (b0 * u0 + b1 * u1 + b2 * u2) * z
                v = (b0 * v0 + b1 * v1 + b2 * v2) * z
                # bilinear, clamp to edge
                tx = u * tex_w - 0.5
                ty = v * tex_h - 0.5
                fx0 = int(np.floor(tx))
                fy0 = int(np.floor(ty))
                ax = tx - fx0
                ay = ty - fy0
                xa = min(max(fx0, 0), tex_w - 1)
                xb = min(max(fx0 + 1, 0), tex_w - 1)
                ya = min(max(fy0, 0), tex_h - 1)
                yb = min(max(fy0 + 1, 0), tex_h - 1)
                for c in range(3):
                    s = ((1 - ax) * (1 - ay) * tex[ya, xa, c]
                         + ax * (1 - ay) * tex[ya, xb, c]
                         + (1 - ax) * ay * tex[yb, xa, c]
                         + ax * ay * tex[yb, xb, c])
                    color[iy, ix, c] = np.uint8(int(s + 0.5))
                zbuf[iy, ix] = z


def _clip_near(corners, uv, near):
    """Sutherland-Hodgman clip of one triangle against z = near.

    corners: (3,3) optical-frame positions; uv: (3,2).
    Returns list of (corners (3,3), uv (3,2)) sub-triangles.
    """
    poly = [(corners[i], uv[i]) for i in range(3)]
    out = []
    for i in range(3):
        cur_p, cur_uv = poly[i]
        nxt_p, nxt_uv = poly[(i + 1) % 3]
        cur_in = cur_p[2] >= near
        nxt_in = nxt_p[2] >= near
        if cur_in:
            out.append((cur_p, cur_uv))
        if cur_in != nxt_in:
            s = (near - cur_p[2]) / (nxt_p[2] - cur_p[2])
            out.append((cur_p + s * (nxt_p - cur_p),
                        cur_uv + s * (nxt_uv - cur_uv)))
    tris = []
    for i in range(1, len(out) - 1):
        tris.append((
            np.stack([out[0][0], out[i][0], out[i + 1][0]]),
            np.stack([out[0][1], out[i][1], out[i + 1][1]]),
        ))
    return tris


def render(mesh: TexturedMesh, intr: CameraIntrinsics, pose: Pose6D,
           clear_color=(0, 0, 0)) -> tuple[np.ndarray, np.ndarray]:
    """Render the mesh from a pose.

    Returns (rgb, depth): rgb is (H,W,3) uint8, depth is (H,W) uint16
    z-depth in millimeters along the optical axis, 0 where no surface
    was hit within [near, far].
    """
    if mesh.n_faces == 0:
        raise RenderError("cannot render an empty mesh")
    r, t = camera_to_world_optical(pose)
    verts_cam = (mesh.vertices - t) @ r  # row-vector form of R^T @ p
    vc = verts_cam[mesh.faces]  # (m,3,3)
    z = vc[:, :, 2]

    near, far = intr.near, intr.far
    all_front = np.all(z >= near, axis=1)
    any_front = np.any(z >= near, axis=1)
    needs_clip = any_front & ~all_front

    tri_pos = [vc[all_front]]
    tri_uv = [mesh.uvs[all_front]]
    if needs_clip.any():
        clipped_pos, clipped_uv = [], []
        for fi in np.flatnonzero(needs_clip):
            for cp, cuv in _clip_near(vc[fi], mesh.uvs[fi], near):
                clipped_pos.append(cp)
                clipped_uv.append(cuv)
        if clipped_pos:
            tri_pos.append(np.stack(clipped_pos))
            tri_uv.append(np.stack(clipped_uv))
    pos = np.concatenate(tri_pos) if len(tri_pos) > 1 else tri_pos[0]
    uv = np.concatenate(tri_uv) if len(tri_uv) > 1 else tri_uv[0]

    height, width = intr.height, intr.width
    color = np.empty((height, width, 3), dtype=np.uint8)
    color[:] = np.asarray(clear_color, dtype=np.uint8)
    zbuf = np.full((height, width), np.inf)

    if len(pos):
        pz = pos[:, :, 2]
        sx = intr.fx * pos[:, :, 0] / pz + intr.cx
        sy = intr.fy * pos[:, :, 1] / pz + intr.cy
        # screen-bounds cull
        visible = ~(
            (sx.max(axis=1) < 0) | (sx.min(axis=1) > width)
            | (sy.max(axis=1) < 0) | (sy.min(axis=1) > height)
            | (pz.min(axis=1) > far)
        )
        sx = np.ascontiguousarray(sx[visible])
        sy = np.ascontiguousarray(sy[visible])
        invz = np.ascontiguousarray(1.0 / pz[visible])
        uoz = np.ascontiguousarray(uv[visible, :, 0] / pz[visible])
        voz = np.ascontiguousarray(uv[visible, :, 1] / pz[visible])
        _rasterize(sx, sy, invz, uoz, voz, mesh.texture, color, zbuf, far)

    depth = np.zeros((height, width), dtype=np.uint16)
    hitmask = np.isfinite(zbuf)
    depth[hitmask] = np.clip(
        np.round(zbuf[hitmask] * 1000.0), 0, 65535
    ).astype(np.uint16)
    return color, depth
