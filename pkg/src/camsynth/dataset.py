"""Dataset reading/writing in the 7-Scenes directory layout.

Layout:
    <scene>/<split>/seq-XX/frame-%06d.color.png   8-bit RGB
    <scene>/<split>/seq-XX/frame-%06d.depth.png   16-bit grayscale, mm
    <scene>/<split>/seq-XX/frame-%06d.pose.txt    4x4 camera-to-world
    <scene>/manifest.json

Pose files hold the CAMERA-TO-WORLD transform (7-Scenes convention),
4 rows of 4 whitespace-separated decimals. One generator path maps to
one seq-XX directory (paths are the unit of spatial continuity), noted
in the manifest.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .pose_math import PoseError, validate_pose_matrix

COLOR_PATTERN = "frame-{:06d}.color.png"
DEPTH_PATTERN = "frame-{:06d}.depth.png"
POSE_PATTERN = "frame-{:06d}.pose.txt"
SEQ_PATTERN = "seq-{:02d}"
MANIFEST_NAME = "manifest.json"

# admits slightly non-orthonormal third-party pose files
THIRD_PARTY_POSE_TOL = 1e-4


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Frame:
    """One dataset record: images plus exact camera-to-world pose."""

    index: int
    rgb: np.ndarray
    depth: np.ndarray
    pose: np.ndarray

    def __post_init__(self):
        if self.index < 0:
            raise DatasetError("frame index must be non-negative")
        rgb = np.asarray(self.rgb, dtype=np.uint8)
        depth = np.asarray(self.depth, dtype=np.uint16)
        if rgb.ndim != 3 or rgb.shape[2] != 3:
            raise DatasetError(f"rgb must be (H,W,3) uint8, got {rgb.shape}")
        if depth.shape != rgb.shape[:2]:
            raise DatasetError("depth resolution must match rgb")
        pose = validate_pose_matrix(self.pose, tol=THIRD_PARTY_POSE_TOL)
        object.__setattr__(self, "rgb", rgb)
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "pose", pose)


def write_pose(path, pose: np.ndarray) -> None:
    lines = ["\t".join(f"{v:.12e}" for v in row) for row in np.asarray(pose)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_pose(path) -> np.ndarray:
    """Parse a 4x4 pose text file and validate it as a rigid transform."""
    text = Path(path).read_text()
    values = [float(tok) for tok in text.split()]
    if len(values) != 16:
        raise DatasetError(f"{path}: expected 16 numbers, got {len(values)}")
    m = np.array(values).reshape(4, 4)
    try:
        return validate_pose_matrix(m, tol=THIRD_PARTY_POSE_TOL)
    except PoseError as e:
        raise DatasetError(f"{path}: {e}") from e


def write_frame(directory, frame: Frame) -> None:
    """Write color/depth/pose files for one frame into `directory`."""
    directory = Path(directory)
    Image.fromarray(frame.rgb).save(directory / COLOR_PATTERN.format(frame.index))
    Image.fromarray(frame.depth).save(directory / DEPTH_PATTERN.format(frame.index))
    write_pose(directory / POSE_PATTERN.format(frame.index), frame.pose)


def read_frame(directory, index: int) -> Frame:
    """Read one frame; raises DatasetError on missing/malformed files."""
    directory = Path(directory)
    paths = [directory / p.format(index)
             for p in (COLOR_PATTERN, DEPTH_PATTERN, POSE_PATTERN)]
    for p in paths:
        if not p.exists():
            raise DatasetError(f"missing file: {p}")
    rgb = np.asarray(Image.open(paths[0]).convert("RGB"), dtype=np.uint8)
    depth = np.asarray(Image.open(paths[1]), dtype=np.uint16)
    pose = read_pose(paths[2])
    return Frame(index=index, rgb=rgb, depth=depth, pose=pose)


def split_paths(path_frame_counts: list[int], train_frames: int | None = None,
                test_frames: int | None = None,
                train_fraction: float | None = None,
                seed: int = 0) -> tuple[list[int], list[int]]:
    """Assign whole paths to train/test.

    Splitting at path granularity keeps test frames from being trivially
    adjacent to train frames. Paths are shuffled deterministically by
    `seed` and accumulated into train until the requested count is met
    (path-boundary rounding can shift the actual count by at most one
    path). Returns (train_path_indices, test_path_indices), each sorted.
    """
    total = sum(path_frame_counts)
    if train_fraction is not None:
        if not 0.0 <= train_fraction <= 1.0:
            raise DatasetError("train_fraction must be in [0,1]")
        train_frames = int(round(train_fraction * total))
    if train_frames is None:
        raise DatasetError("specify train_frames or train_fraction")
    if test_frames is not None and train_frames + test_frames > total:
        raise DatasetError(
            f"requested {train_frames}+{test_frames} frames, only {total} available"
        )

    from .sampling import make_rng

    order = make_rng(seed, 0xD5).permutation(len(path_frame_counts))
    train, test = [], []
    acc_train = acc_test = 0
    for pi in order:
        if acc_train < train_frames:
            train.append(int(pi))
            acc_train += path_frame_counts[pi]
        elif test_frames is None or acc_test < test_frames:
            test.append(int(pi))
            acc_test += path_frame_counts[pi]
    return sorted(train), sorted(test)


@dataclass
class DatasetManifest:
    """Provenance record written next to the data."""

    scene: str
    generator_version: str
    train_frames: int
    test_frames: int
    intrinsics: dict
    frame_spacing: float
    master_seed: int
    split_seed: int
    # path indices per split; one path == one seq-XX directory
    train_paths: list[int] = field(default_factory=list)
    test_paths: list[int] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    notes: str = "sequences correspond to generator paths"

    def to_dict(self) -> dict:
        return {
            "scene": self.scene,
            "generator_version": self.generator_version,
            "train_frames": self.train_frames,
            "test_frames": self.test_frames,
            "intrinsics": self.intrinsics,
            "frame_spacing": self.frame_spacing,
            "master_seed": self.master_seed,
            "split_seed": self.split_seed,
            "train_paths": self.train_paths,
            "test_paths": self.test_paths,
            "config": self.config,
            "notes": self.notes,
        }

    def save(self, scene_dir) -> None:
        with open(Path(scene_dir) / MANIFEST_NAME, "w") as f:
            json.dump(self.to_dict(), f, indent=2)

    @staticmethod
    def load(scene_dir) -> "DatasetManifest":
        path = Path(scene_dir) / MANIFEST_NAME
        if not path.exists():
            raise DatasetError(f"no manifest at {path}")
        with open(path) as f:
            d = json.load(f)
        return DatasetManifest(**d)


_FRAME_RE = re.compile(r"frame-(\d{6})\.pose\.txt$")


def list_frames(split_dir) -> list[tuple[str, int]]:
    """All (seq_name, frame_index) pairs under a split directory."""
    split_dir = Path(split_dir)
    out = []
    if not split_dir.exists():
        return out
    for seq in sorted(p for p in split_dir.iterdir() if p.is_dir()):
        for f in sorted(seq.iterdir()):
            m = _FRAME_RE.search(f.name)
            if m:
                out.append((seq.name, int(m.group(1))))
    return out


def inspect_dataset(scene_dir) -> dict:
    """Consistency check of a dataset directory.

    Returns a report dict with per-split frame counts, manifest-vs-disk
    comparison, pose validation results, spacing statistics per
    sequence, and a list of issues (empty when consistent).
    """
    scene_dir = Path(scene_dir)
    issues: list[str] = []
    report: dict = {"scene_dir": str(scene_dir), "splits": {}, "issues": issues}

    manifest = None
    try:
        manifest = DatasetManifest.load(scene_dir)
        report["manifest"] = manifest.to_dict()
    except DatasetError as e:
        issues.append(str(e))

    spacings: list[float] = []
    for split in ("train", "test"):
        split_dir = scene_dir / split
        frames = list_frames(split_dir)
        n_ok = 0
        prev: dict[str, np.ndarray] = {}
        for seq, idx in frames:
            base = split_dir / seq
            for pattern in (COLOR_PATTERN, DEPTH_PATTERN):
                if not (base / pattern.format(idx)).exists():
                    issues.append(f"{split}/{seq}: frame {idx} missing {pattern.format(idx)}")
            try:
                pose = read_pose(base / POSE_PATTERN.format(idx))
                n_ok += 1
            except DatasetError as e:
                issues.append(str(e))
                continue
            if seq in prev:
                spacings.append(float(np.linalg.norm(pose[:3, 3] - prev[seq][:3, 3])))
            prev[seq] = pose
        report["splits"][split] = {
            "frames": len(frames),
            "valid_poses": n_ok,
            "sequences": len({s for s, _ in frames}),
        }
        if manifest is not None:
            expected = manifest.train_frames if split == "train" else manifest.test_frames
            if expected != len(frames):
                issues.append(
                    f"manifest says {expected} {split} frames, disk has {len(frames)}"
                )
    if spacings:
        arr = np.array(spacings)
        report["spacing"] = {
            "count": len(arr),
            "median": float(np.median(arr)),
            "mean": float(arr.mean()),
            "min": float(arr.min()),
            "max": float(arr.max()),
        }
        report["spacing_values"] = [float(s) for s in spacings]
    report["consistent"] = not issues
    return report
