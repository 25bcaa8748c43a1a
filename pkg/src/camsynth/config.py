"""Run configuration: YAML schema, validation, and assembly helpers.

The config file is a YAML mapping with an explicit `schema_version`.
Angles are given in degrees in the file and converted to radians
internally. Either `mesh` (a file path) or `procedural` (a built-in
test scene) must be present.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import procedural
from .mesh_io import TexturedMesh, compute_bounds, load_mesh
from .render import CameraIntrinsics
from .sampling import SamplingBounds
from .selection import SelectionConfig
from .trajectory import GenerationConfig

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SplitRequest:
    """Either explicit frame counts or a train fraction."""

    train: int | None = None
    test: int | None = None
    train_fraction: float | None = None

    def __post_init__(self):
        if self.train_fraction is None and self.train is None:
            raise ConfigError("split needs `train`(+`test`) counts or `train_fraction`")
        if self.train_fraction is not None and not 0.0 <= self.train_fraction <= 1.0:
            raise ConfigError("train_fraction must be in [0,1]")


@dataclass(frozen=True)
class RunConfig:
    scene_name: str
    output: str
    mesh: str | None = None
    mesh_texture: str | None = None
    procedural: dict | None = None
    seed: int = 0
    total_frames: int = 100
    candidates_per_path: int = 16
    frame_spacing: float = 0.02
    viewpoint_clearance_min: float = 0.5
    resample_limit: int = 8
    bounds_margin: float = 0.0
    roll_range_deg: tuple[float, float] = (-5.0, 5.0)
    pitch_range_deg: tuple[float, float] = (-30.0, 30.0)
    yaw_range_deg: tuple[float, float] = (-180.0, 180.0)
    decimate_ratio: float = 1.0
    split: SplitRequest = field(default_factory=lambda: SplitRequest(train_fraction=1.0))
    camera: CameraIntrinsics = field(
        default_factory=lambda: CameraIntrinsics(
            fx=277.0, fy=277.0, cx=160.0, cy=120.0, width=320, height=240
        )
    )
    clear_color: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self):
        if self.mesh is None and self.procedural is None:
            raise ConfigError("config needs `mesh` or `procedural`")

    # ------------------------------------------------------------------
    def to_dict(self) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "scene_name": self.scene_name,
            "output": self.output,
            "seed": self.seed,
            "total_frames": self.total_frames,
            "candidates_per_path": self.candidates_per_path,
            "frame_spacing": self.frame_spacing,
            "viewpoint_clearance_min": self.viewpoint_clearance_min,
            "resample_limit": self.resample_limit,
            "bounds_margin": self.bounds_margin,
            "roll_range_deg": list(self.roll_range_deg),
            "pitch_range_deg": list(self.pitch_range_deg),
            "yaw_range_deg": list(self.yaw_range_deg),
            "decimate_ratio": self.decimate_ratio,
            "split": {
                k: v
                for k, v in (
                    ("train", self.split.train),
                    ("test", self.split.test),
                    ("train_fraction", self.split.train_fraction),
                )
                if v is not None
            },
            "camera": {
                "fx": self.camera.fx, "fy": self.camera.fy,
                "cx": self.camera.cx, "cy": self.camera.cy,
                "width": self.camera.width, "height": self.camera.height,
                "near": self.camera.near, "far": self.camera.far,
            },
            "clear_color": list(self.clear_color),
        }
        if self.mesh is not None:
            d["mesh"] = self.mesh
        if self.mesh_texture is not None:
            d["mesh_texture"] = self.mesh_texture
        if self.procedural is not None:
            d["procedural"] = self.procedural
        return d

    @staticmethod
    def from_dict(d: dict) -> "RunConfig":
        d = dict(d)
        version = d.pop("schema_version", None)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version!r}")
        try:
            split = SplitRequest(**d.pop("split", {"train_fraction": 1.0}))
            camera = CameraIntrinsics(**d.pop("camera", {}))
        except TypeError as e:
            raise ConfigError(str(e)) from e
        for key in ("roll_range_deg", "pitch_range_deg", "yaw_range_deg", "clear_color"):
            if key in d:
                d[key] = tuple(d[key])
        try:
            return RunConfig(split=split, camera=camera, **d)
        except TypeError as e:
            raise ConfigError(str(e)) from e

    def save(self, path) -> None:
        with open(path, "w") as f:
            yaml.safe_dump(self.to_dict(), f, sort_keys=True)

    @staticmethod
    def load(path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        with open(path) as f:
            d = yaml.safe_load(f)
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: config must be a mapping")
        return RunConfig.from_dict(d)

    # ------------------------------------------------------------------
    def load_scene_mesh(self) -> TexturedMesh:
        if self.mesh is not None:
            return load_mesh(self.mesh, texture=self.mesh_texture)
        kind = self.procedural.get("kind")
        params = {k: v for k, v in self.procedural.items() if k != "kind"}
        if "size" in params:
            params["size"] = tuple(params["size"])
        builders = {
            "box_room": procedural.box_room,
            "box_room_with_faces": procedural.box_room_with_faces,
            "corridor": procedural.corridor,
        }
        if kind not in builders:
            raise ConfigError(f"unknown procedural mesh kind: {kind!r}")
        return builders[kind](**params)

    def sampling_bounds(self, mesh: TexturedMesh) -> SamplingBounds:
        rad = lambda pair: (math.radians(pair[0]), math.radians(pair[1]))
        return SamplingBounds.from_mesh_bounds(
            compute_bounds(mesh),
            margin=self.bounds_margin,
            roll_range=rad(self.roll_range_deg),
            pitch_range=rad(self.pitch_range_deg),
            yaw_range=rad(self.yaw_range_deg),
        )

    def generation_config(self, mesh: TexturedMesh) -> GenerationConfig:
        return GenerationConfig(
            total_frames=self.total_frames,
            bounds=self.sampling_bounds(mesh),
            selection=SelectionConfig(
                viewpoint_clearance_min=self.viewpoint_clearance_min,
                resample_limit=self.resample_limit,
            ),
            k=self.candidates_per_path,
            frame_spacing=self.frame_spacing,
            master_seed=self.seed,
        )
