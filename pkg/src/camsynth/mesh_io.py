"""Textured triangle mesh loading, saving, bounds, and decimation.

Supported formats: Wavefront OBJ (+MTL with a map_Kd texture) and PLY
(ascii or binary_little_endian) with per-vertex texture coordinates
(u,v or s,t) plus an explicit texture image.

UV convention inside the package: (0,0) is the TOP-LEFT of the texture
raster. OBJ/PLY store v with a bottom-left origin, so v is flipped on
load and unflipped on save.

Units are meters throughout; no unit metadata is read from files.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

log = logging.getLogger(__name__)


class MeshError(ValueError):
    """Unreadable, malformed, or degenerate mesh input."""


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned bounding box (meters)."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        mn = np.asarray(self.min, dtype=float)
        mx = np.asarray(self.max, dtype=float)
        if mn.shape != (3,) or mx.shape != (3,):
            raise MeshError("Aabb corners must be 3-vectors")
        if np.any(mn > mx):
            raise MeshError(f"Aabb min {mn} exceeds max {mx}")
        object.__setattr__(self, "min", mn)
        object.__setattr__(self, "max", mx)

    @property
    def size(self) -> np.ndarray:
        return self.max - self.min

    @property
    def volume(self) -> float:
        return float(np.prod(self.size))

    def shrink(self, margin: float) -> "Aabb":
        """Inset the box by `margin` on every face, clamped at the center."""
        c = 0.5 * (self.min + self.max)
        mn = np.minimum(self.min + margin, c)
        mx = np.maximum(self.max - margin, c)
        return Aabb(mn, mx)


@dataclass(frozen=True)
class TexturedMesh:
    """Indexed triangle mesh with per-corner UVs and one texture atlas.

    vertices: (n,3) float64 positions (m)
    faces:    (m,3) int64 vertex indices
    uvs:      (m,3,2) float64 per-corner texture coordinates in [0,1]^2
    texture:  (H,W,3) uint8 RGB raster
    materials: optional (m,) int per-face material index
    """

    vertices: np.ndarray
    faces: np.ndarray
    uvs: np.ndarray
    texture: np.ndarray
    materials: np.ndarray | None = field(default=None)

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        uv = np.ascontiguousarray(np.asarray(self.uvs, dtype=np.float64))
        tex = np.ascontiguousarray(np.asarray(self.texture, dtype=np.uint8))
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must be (n,3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError(f"faces must be (m,3), got {f.shape}")
        if uv.shape != (len(f), 3, 2):
            raise MeshError(f"uvs must be (m,3,2), got {uv.shape}")
        if tex.ndim != 3 or tex.shape[2] != 3 or tex.shape[0] < 1 or tex.shape[1] < 1:
            raise MeshError(f"texture must be (H,W,3) with H,W >= 1, got {tex.shape}")
        if not np.all(np.isfinite(v)):
            raise MeshError("vertex coordinates contain NaN/inf")
        if not np.all(np.isfinite(uv)):
            raise MeshError("UV coordinates contain NaN/inf")
        if len(f) and (f.min() < 0 or f.max() >= len(v)):
            raise MeshError("face index out of range")
        if len(f) and np.any(
            (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
        ):
            raise MeshError("face with repeated vertex index")
        for name, arr in (("vertices", v), ("faces", f), ("uvs", uv), ("texture", tex)):
            object.__setattr__(self, name, arr)
            arr.setflags(write=False)
        if self.materials is not None:
            m = np.ascontiguousarray(np.asarray(self.materials, dtype=np.int64))
            if m.shape != (len(f),):
                raise MeshError("materials must be one index per face")
            m.setflags(write=False)
            object.__setattr__(self, "materials", m)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def triangle_corners(self) -> np.ndarray:
        """(m,3,3) corner positions of every face."""
        return self.vertices[self.faces]


def _triangle_areas(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    p = vertices[faces]
    return 0.5 * np.linalg.norm(
        np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1
    )


def drop_zero_area_faces(
    vertices: np.ndarray, faces: np.ndarray, uvs: np.ndarray, eps: float = 1e-14
):
    """Remove degenerate (zero-area or repeated-index) triangles."""
    if len(faces) == 0:
        return faces, uvs, 0
    distinct = (
        (faces[:, 0] != faces[:, 1])
        & (faces[:, 1] != faces[:, 2])
        & (faces[:, 0] != faces[:, 2])
    )
    keep = distinct & (_triangle_areas(vertices, faces) > eps)
    dropped = int((~keep).sum())
    if dropped:
        log.info("dropped %d zero-area/degenerate triangles", dropped)
    return faces[keep], uvs[keep], dropped


# ---------------------------------------------------------------------------
# OBJ / MTL


def _parse_mtl(path: Path) -> dict[str, Path | None]:
    textures: dict[str, Path | None] = {}
    current = None
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if line.startswith("newmtl "):
            current = line.split(None, 1)[1]
            textures[current] = None
        elif line.startswith("map_Kd ") and current is not None:
            textures[current] = path.parent / line.split(None, 1)[1]
    return textures


def _load_obj(path: Path) -> TexturedMesh:
    positions: list[tuple[float, float, float]] = []
    texcoords: list[tuple[float, float]] = []
    face_v: list[list[int]] = []
    face_vt: list[list[int]] = []
    mtl_textures: dict[str, Path | None] = {}
    texture_path: Path | None = None

    def resolve(idx: int, n: int) -> int:
        return idx - 1 if idx > 0 else n + idx

    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            positions.append((float(parts[1]), float(parts[2]), float(parts[3])))
        elif tag == "vt":
            texcoords.append((float(parts[1]), float(parts[2])))
        elif tag == "f":
            vi, ti = [], []
            for tok in parts[1:]:
                fields = tok.split("/")
                vi.append(resolve(int(fields[0]), len(positions)))
                if len(fields) > 1 and fields[1]:
                    ti.append(resolve(int(fields[1]), len(texcoords)))
                else:
                    ti.append(-1)
            # fan-triangulate polygons
            for i in range(1, len(vi) - 1):
                face_v.append([vi[0], vi[i], vi[i + 1]])
                face_vt.append([ti[0], ti[i], ti[i + 1]])
        elif tag == "mtllib":
            mtl_path = path.parent / line.split(None, 1)[1]
            if mtl_path.exists():
                mtl_textures.update(_parse_mtl(mtl_path))
        elif tag == "usemtl":
            name = parts[1] if len(parts) > 1 else ""
            tp = mtl_textures.get(name)
            if tp is not None:
                if texture_path is not None and tp != texture_path:
                    raise MeshError(
                        "multiple distinct textures are not supported "
                        f"({texture_path.name} vs {tp.name})"
                    )
                texture_path = tp

    if not face_v:
        raise MeshError(f"{path}: mesh has no faces")
    if texture_path is None:
        # fall back to the first texture declared in the MTL, if any
        for tp in mtl_textures.values():
            if tp is not None:
                texture_path = tp
                break
    if texture_path is None:
        raise MeshError(f"{path}: no texture (map_Kd) found")
    if not texture_path.exists():
        raise MeshError(f"{path}: texture file missing: {texture_path}")

    vertices = np.array(positions, dtype=np.float64).reshape(-1, 3)
    faces = np.array(face_v, dtype=np.int64)
    vt = np.array(texcoords, dtype=np.float64).reshape(-1, 2)
    vt_idx = np.array(face_vt, dtype=np.int64)
    if np.any(vt_idx < 0):
        raise MeshError(f"{path}: faces without texture coordinates")
    uvs = vt[vt_idx]
    uvs[:, :, 1] = 1.0 - uvs[:, :, 1]  # bottom-left origin -> top-left

    texture = np.asarray(Image.open(texture_path).convert("RGB"), dtype=np.uint8)
    faces, uvs, _ = drop_zero_area_faces(vertices, faces, uvs)
    if len(faces) == 0:
        raise MeshError(f"{path}: all faces degenerate")
    return TexturedMesh(vertices, faces, uvs, texture)


def _save_obj(path: Path, mesh: TexturedMesh) -> None:
    stem = path.stem
    tex_name = f"{stem}.png"
    mtl_name = f"{stem}.mtl"
    Image.fromarray(mesh.texture).save(path.parent / tex_name)
    (path.parent / mtl_name).write_text(
        f"newmtl material0\nmap_Kd {tex_name}\n"
    )
    lines = [f"mtllib {mtl_name}", "usemtl material0"]
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}")
    for corner_uv in mesh.uvs.reshape(-1, 2):
        u, v = corner_uv
        lines.append(f"vt {u:.9g} {1.0 - v:.9g}")
    for i, f in enumerate(mesh.faces):
        t = 3 * i
        lines.append(
            f"f {f[0] + 1}/{t + 1} {f[1] + 1}/{t + 2} {f[2] + 1}/{t + 3}"
        )
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# PLY


_PLY_TYPES = {
    "char": ("b", 1), "int8": ("b", 1),
    "uchar": ("B", 1), "uint8": ("B", 1),
    "short": ("h", 2), "int16": ("h", 2),
    "ushort": ("H", 2), "uint16": ("H", 2),
    "int": ("i", 4), "int32": ("i", 4),
    "uint": ("I", 4), "uint32": ("I", 4),
    "float": ("f", 4), "float32": ("f", 4),
    "double": ("d", 8), "float64": ("d", 8),
}


def _load_ply(path: Path, texture_path: Path | None) -> TexturedMesh:
    data = path.read_bytes()
    end = data.find(b"end_header\n")
    if not data.startswith(b"ply") or end < 0:
        raise MeshError(f"{path}: not a PLY file")
    header = data[: end + len(b"end_header\n")].decode("ascii")
    body = data[end + len(b"end_header\n"):]

    fmt = None
    elements: list[tuple[str, int, list[tuple[str, str, str | None]]]] = []
    tex_file = None
    for line in header.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "comment" and len(parts) >= 3 and parts[1] == "TextureFile":
            tex_file = parts[2]
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if parts[1] == "list":
                elements[-1][2].append((parts[4], parts[3], parts[2]))
            else:
                elements[-1][2].append((parts[2], parts[1], None))
    if fmt not in ("ascii", "binary_little_endian"):
        raise MeshError(f"{path}: unsupported PLY format {fmt}")

    parsed: dict[str, dict] = {}
    if fmt == "ascii":
        tokens = body.decode("ascii").split("\n")
        row = 0
        for name, count, props in elements:
            cols: dict[str, list] = {p[0]: [] for p in props}
            for _ in range(count):
                vals = tokens[row].split()
                row += 1
                i = 0
                for pname, ptype, ltype in props:
                    if ltype is None:
                        cols[pname].append(float(vals[i]))
                        i += 1
                    else:
                        n = int(vals[i])
                        cols[pname].append([float(x) for x in vals[i + 1 : i + 1 + n]])
                        i += 1 + n
            parsed[name] = cols
    else:
        off = 0
        for name, count, props in elements:
            cols = {p[0]: [] for p in props}
            for _ in range(count):
                for pname, ptype, ltype in props:
                    if ltype is None:
                        code, size = _PLY_TYPES[ptype]
                        (val,) = struct.unpack_from("<" + code, body, off)
                        off += size
                        cols[pname].append(val)
                    else:
                        lcode, lsize = _PLY_TYPES[ltype]
                        (n,) = struct.unpack_from("<" + lcode, body, off)
                        off += lsize
                        code, size = _PLY_TYPES[ptype]
                        vals = struct.unpack_from("<" + str(n) + code, body, off)
                        off += n * size
                        cols[pname].append(list(vals))
            parsed[name] = cols

    if "vertex" not in parsed or "face" not in parsed:
        raise MeshError(f"{path}: PLY missing vertex or face element")
    vcols = parsed["vertex"]
    vertices = np.column_stack(
        [np.array(vcols["x"]), np.array(vcols["y"]), np.array(vcols["z"])]
    ).astype(np.float64)
    ukey = "u" if "u" in vcols else ("s" if "s" in vcols else None)
    vkey = "v" if "v" in vcols else ("t" if "t" in vcols else None)
    if ukey is None or vkey is None:
        raise MeshError(f"{path}: PLY vertices carry no u,v/s,t coordinates")
    per_vertex_uv = np.column_stack(
        [np.array(vcols[ukey]), 1.0 - np.array(vcols[vkey])]
    ).astype(np.float64)

    fcols = parsed["face"]
    key = "vertex_indices" if "vertex_indices" in fcols else "vertex_index"
    tris = []
    for poly in fcols[key]:
        idx = [int(i) for i in poly]
        for i in range(1, len(idx) - 1):
            tris.append([idx[0], idx[i], idx[i + 1]])
    faces = np.array(tris, dtype=np.int64).reshape(-1, 3)
    if len(faces) == 0:
        raise MeshError(f"{path}: mesh has no faces")
    uvs = per_vertex_uv[faces]

    if tex_file is not None and texture_path is None:
        texture_path = path.parent / tex_file
    if texture_path is None or not Path(texture_path).exists():
        raise MeshError(f"{path}: no texture image found")
    texture = np.asarray(Image.open(texture_path).convert("RGB"), dtype=np.uint8)
    faces, uvs, _ = drop_zero_area_faces(vertices, faces, uvs)
    if len(faces) == 0:
        raise MeshError(f"{path}: all faces degenerate")
    return TexturedMesh(vertices, faces, uvs, texture)


# ---------------------------------------------------------------------------
# Public API


def load_mesh(path, texture: str | Path | None = None) -> TexturedMesh:
    """Load a textured mesh from an OBJ(+MTL) or PLY file.

    `texture` overrides/provides the texture image path for PLY files
    that do not declare one in a `comment TextureFile` line.
    """
    path = Path(path)
    if not path.exists():
        raise MeshError(f"mesh file not found: {path}")
    suffix = path.suffix.lower()
    if suffix == ".obj":
        mesh = _load_obj(path)
    elif suffix == ".ply":
        mesh = _load_ply(path, Path(texture) if texture else None)
    else:
        raise MeshError(f"unsupported mesh format: {suffix}")
    log.info("loaded %s: %d vertices, %d faces", path.name, mesh.n_vertices, mesh.n_faces)
    return mesh


def save_mesh(path, mesh: TexturedMesh) -> None:
    """Save a mesh as OBJ + MTL + PNG texture next to `path`."""
    path = Path(path)
    if path.suffix.lower() != ".obj":
        raise MeshError("only OBJ export is supported")
    _save_obj(path, mesh)


def compute_bounds(mesh: TexturedMesh) -> Aabb:
    """Tight axis-aligned bounding box of all mesh vertices."""
    if mesh.n_vertices == 0:
        raise MeshError("cannot compute bounds of an empty mesh")
    return Aabb(mesh.vertices.min(axis=0), mesh.vertices.max(axis=0))


def _vertex_quadrics(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Per-vertex 4x4 fundamental error quadrics (sum of incident face
    plane quadrics)."""
    p = vertices[faces]
    n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    norm = np.linalg.norm(n, axis=1, keepdims=True)
    norm[norm == 0] = 1.0
    n = n / norm
    d = -np.einsum("ij,ij->i", n, p[:, 0])
    planes = np.concatenate([n, d[:, None]], axis=1)  # (m,4)
    kf = np.einsum("mi,mj->mij", planes, planes)
    q = np.zeros((len(vertices), 4, 4))
    for c in range(3):
        np.add.at(q, faces[:, c], kf)
    return q


def _quadric_cost(q: np.ndarray, p: np.ndarray) -> float:
    h = np.array([p[0], p[1], p[2], 1.0])
    return float(h @ q @ h)


def decimate(mesh: TexturedMesh, target_face_ratio: float) -> TexturedMesh:
    """Reduce face count to <= ceil(ratio * n_faces) by deterministic
    quadric-error edge collapse.

    ratio = 1.0 returns the mesh unchanged. Collapsed vertices go to the
    quadric-optimal position when the system is well conditioned (falling
    back to the better endpoint / midpoint otherwise), clamped to the
    original bounding box inflated by 0.5% per side, so the output box
    grows by at most 1% per axis. The result is meant for ray-cast
    queries, never for rendering; per-face UVs are carried over
    approximately.
    """
    import heapq

    if not 0.0 < target_face_ratio <= 1.0:
        raise MeshError(f"target_face_ratio must be in (0,1], got {target_face_ratio}")
    if target_face_ratio == 1.0:
        return mesh
    target = int(np.ceil(target_face_ratio * mesh.n_faces))

    verts = mesh.vertices.copy()
    faces = mesh.faces.copy()
    quadrics = _vertex_quadrics(verts, faces)
    bounds = compute_bounds(mesh)
    inflate = 0.005 * bounds.size
    clamp_lo = bounds.min - inflate
    clamp_hi = bounds.max + inflate
    alive_face = np.ones(len(faces), dtype=bool)
    n_alive = len(faces)

    vertex_faces: list[set[int]] = [set() for _ in range(len(verts))]
    for fi, f in enumerate(faces):
        for v in f:
            vertex_faces[v].add(fi)

    def edge_entry(a: int, b: int, version: int):
        a, b = (a, b) if a < b else (b, a)
        q = quadrics[a] + quadrics[b]
        candidates = [verts[a], verts[b], 0.5 * (verts[a] + verts[b])]
        a3, b3 = q[:3, :3], -q[:3, 3]
        try:
            opt = np.linalg.solve(a3, b3)
            if np.all(np.isfinite(opt)):
                candidates.append(np.clip(opt, clamp_lo, clamp_hi))
        except np.linalg.LinAlgError:
            pass
        costs = [_quadric_cost(q, p) for p in candidates]
        best = int(np.argmin(costs))
        return (costs[best], a, b, version, tuple(candidates[best]))

    version = np.zeros(len(verts), dtype=np.int64)
    edges = set()
    for f in faces:
        for i in range(3):
            a, b = int(f[i]), int(f[(i + 1) % 3])
            edges.add((min(a, b), max(a, b)))
    heap = [edge_entry(a, b, 0) for a, b in sorted(edges)]
    heapq.heapify(heap)

    while n_alive > target and heap:
        cost, a, b, ver, placement = heapq.heappop(heap)
        if ver != version[a] + version[b]:
            continue  # stale entry
        if not vertex_faces[a] or not vertex_faces[b]:
            continue
        # collapse b into a
        verts[a] = placement
        quadrics[a] = quadrics[a] + quadrics[b]
        for fi in vertex_faces[b]:
            if not alive_face[fi]:
                continue
            f = faces[fi]
            f[f == b] = a
            if f[0] == f[1] or f[1] == f[2] or f[0] == f[2]:
                alive_face[fi] = False
                n_alive -= 1
                for v in set(int(x) for x in f):
                    vertex_faces[v].discard(fi)
            else:
                vertex_faces[a].add(fi)
        vertex_faces[b] = set()
        version[a] += 1
        version[b] += 1
        # refresh costs of edges incident to the merged vertex
        neighbors = set()
        for fi in vertex_faces[a]:
            for v in faces[fi]:
                if v != a:
                    neighbors.add(int(v))
        for nb in sorted(neighbors):
            heapq.heappush(heap, edge_entry(a, nb, int(version[a] + version[nb])))

    keep = np.flatnonzero(alive_face)
    new_faces = faces[keep]
    new_uvs = mesh.uvs[keep]
    area_ok = _triangle_areas(verts, new_faces) > 1e-14
    new_faces = new_faces[area_ok]
    new_uvs = new_uvs[area_ok]
    if len(new_faces) == 0:
        raise MeshError("decimation collapsed the mesh to zero faces")

    used = np.unique(new_faces)
    remap = np.full(len(verts), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return TexturedMesh(verts[used], remap[new_faces], new_uvs, mesh.texture)
