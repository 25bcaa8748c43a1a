"""Procedurally built textured meshes for tests, demos, and benchmarks.

Real inputs are photo-textured scans; these generators provide small,
fully controlled stand-ins: single quads, walled rooms, corridors with
known occluders, and icospheres.
"""

from __future__ import annotations

import numpy as np

from .mesh_io import TexturedMesh


def checker_texture(size: int = 64, tile: int = 8,
                    bright=(230, 230, 230), dark=(40, 60, 90)) -> np.ndarray:
    """RGB checkerboard raster of size x size pixels."""
    yy, xx = np.mgrid[0:size, 0:size]
    mask = ((xx // tile) + (yy // tile)) % 2 == 0
    tex = np.empty((size, size, 3), dtype=np.uint8)
    tex[mask] = bright
    tex[~mask] = dark
    return tex


def solid_texture(color, size: int = 8) -> np.ndarray:
    """Uniform RGB raster."""
    return np.full((size, size, 3), color, dtype=np.uint8)


def grid_patch(origin, edge_u, edge_v, nu: int = 1, nv: int = 1):
    """Subdivided parallelogram patch.

    Returns (vertices, faces, uvs) with the full patch mapped to the
    whole [0,1]^2 texture domain. Winding is such that the front face
    normal is cross(edge_u, edge_v) (irrelevant to the two-sided
    renderer/raycaster, but kept consistent).
    """
    origin = np.asarray(origin, dtype=float)
    edge_u = np.asarray(edge_u, dtype=float)
    edge_v = np.asarray(edge_v, dtype=float)
    us = np.linspace(0.0, 1.0, nu + 1)
    vs = np.linspace(0.0, 1.0, nv + 1)
    verts = (origin[None, None]
             + us[None, :, None] * edge_u[None, None]
             + vs[:, None, None] * edge_v[None, None]).reshape(-1, 3)

    def vid(i, j):  # row i (v), col j (u)
        return i * (nu + 1) + j

    faces, uvs = [], []
    for i in range(nv):
        for j in range(nu):
            a, b = vid(i, j), vid(i, j + 1)
            c, d = vid(i + 1, j + 1), vid(i + 1, j)
            ua, ub = (us[j], vs[i]), (us[j + 1], vs[i])
            uc, ud = (us[j + 1], vs[i + 1]), (us[j], vs[i + 1])
            faces.append([a, b, c])
            uvs.append([ua, ub, uc])
            faces.append([a, c, d])
            uvs.append([ua, uc, ud])
    return verts, np.array(faces, dtype=np.int64), np.array(uvs, dtype=float)


def build_mesh(patches, texture) -> TexturedMesh:
    """Assemble (vertices, faces, uvs) patch tuples into one mesh."""
    all_v, all_f, all_uv = [], [], []
    offset = 0
    for verts, faces, uvs in patches:
        all_v.append(verts)
        all_f.append(faces + offset)
        all_uv.append(uvs)
        offset += len(verts)
    return TexturedMesh(
        np.vstack(all_v), np.vstack(all_f), np.vstack(all_uv), texture
    )


def quad(origin, edge_u, edge_v, texture=None, nu: int = 1, nv: int = 1) -> TexturedMesh:
    """Single textured parallelogram."""
    if texture is None:
        texture = checker_texture()
    return build_mesh([grid_patch(origin, edge_u, edge_v, nu, nv)], texture)


def box_room(size=(10.0, 10.0, 3.0), subdiv: int = 1, texture=None) -> TexturedMesh:
    """Closed rectangular room: 6 walls, viewed from inside.

    The box spans [0,sx] x [0,sy] x [0,sz]. Each wall is a subdiv x
    subdiv grid (12 * subdiv^2 triangles total).
    """
    sx, sy, sz = size
    if texture is None:
        texture = checker_texture()
    n = subdiv
    patches = [
        grid_patch((0, 0, 0), (sx, 0, 0), (0, sy, 0), n, n),     # floor
        grid_patch((0, 0, sz), (sx, 0, 0), (0, sy, 0), n, n),    # ceiling
        grid_patch((0, 0, 0), (sx, 0, 0), (0, 0, sz), n, n),     # y=0 wall
        grid_patch((0, sy, 0), (sx, 0, 0), (0, 0, sz), n, n),    # y=sy wall
        grid_patch((0, 0, 0), (0, sy, 0), (0, 0, sz), n, n),     # x=0 wall
        grid_patch((sx, 0, 0), (0, sy, 0), (0, 0, sz), n, n),    # x=sx wall
    ]
    return build_mesh(patches, texture)


def box_room_with_faces(size=(10.0, 10.0, 3.0), min_faces: int = 200_000,
                        texture=None) -> TexturedMesh:
    """Box room subdivided until it has at least `min_faces` triangles."""
    subdiv = int(np.ceil(np.sqrt(min_faces / 12.0)))
    return box_room(size, subdiv=subdiv, texture=texture)


def corridor(length: float = 12.0, width: float = 2.0, height: float = 2.5,
             wall_x: float | None = None, texture=None) -> TexturedMesh:
    """Corridor along +X, optionally blocked by a full partition at x=wall_x.

    Useful for admissibility tests: rays along the corridor axis hit the
    partition (if present) or the far end wall at x=length.
    """
    if texture is None:
        texture = checker_texture()
    patches = [
        grid_patch((0, 0, 0), (length, 0, 0), (0, width, 0)),          # floor
        grid_patch((0, 0, height), (length, 0, 0), (0, width, 0)),     # ceiling
        grid_patch((0, 0, 0), (length, 0, 0), (0, 0, height)),         # side y=0
        grid_patch((0, width, 0), (length, 0, 0), (0, 0, height)),     # side y=w
        grid_patch((0, 0, 0), (0, width, 0), (0, 0, height)),          # near end
        grid_patch((length, 0, 0), (0, width, 0), (0, 0, height)),     # far end
    ]
    if wall_x is not None:
        patches.append(grid_patch((wall_x, 0, 0), (0, width, 0), (0, 0, height)))
    return build_mesh(patches, texture)


def icosphere(subdivisions: int = 2, radius: float = 1.0, texture=None) -> TexturedMesh:
    """Unit icosphere with 20 * 4^subdivisions faces and spherical UVs."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
            (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
            (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
        ],
        dtype=float,
    )
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [tuple(v) for v in verts]
    cache: dict[tuple[int, int], int] = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key not in cache:
            m = np.array(verts[i]) + np.array(verts[j])
            m /= np.linalg.norm(m)
            cache[key] = len(verts)
            verts.append(tuple(m))
        return cache[key]

    for _ in range(subdivisions):
        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces

    vertices = np.array(verts, dtype=float) * radius
    faces = np.array(faces, dtype=np.int64)
    # spherical projection per corner
    corners = vertices[faces] / radius
    u = 0.5 + np.arctan2(corners[..., 1], corners[..., 0]) / (2 * np.pi)
    v = 0.5 - np.arcsin(np.clip(corners[..., 2], -1, 1)) / np.pi
    uvs = np.stack([u, v], axis=-1)
    if texture is None:
        texture = checker_texture()
    return TexturedMesh(vertices, faces, uvs, texture)
