"""Path interpolation and the sample -> select -> traverse driver.

A path is the straight segment from the current pose to the selected
target, discretized into n = ceil(distance / frame_spacing) equally
spaced poses. Angles interpolate along the shortest signed arc (wrap
aware). The path's start pose is not re-emitted (it was the previous
path's endpoint); pose n lands exactly on the target.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, asdict
from typing import Callable

import numpy as np

from .mesh_io import TexturedMesh
from .pose_math import Pose6D, wrap_angle
from .raycast import BvhIndex, viewpoint_clearance
from .sampling import CandidateSet, SamplingBounds, make_rng, sample_candidates
from .selection import (
    FilterCounts,
    SelectionConfig,
    SelectionError,
    filter_admissible,
    is_valid_initial_pose,
    select_target,
)

FrameSink = Callable[[Pose6D, int, int], None]  # (pose, path_index, frame_index)


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class PathSegment:
    """Interpolated poses from start (exclusive) to end (inclusive)."""

    start: Pose6D
    end: Pose6D
    frame_spacing: float
    poses: tuple[Pose6D, ...]

    @property
    def n(self) -> int:
        return len(self.poses)


def interpolate_path(start: Pose6D, end: Pose6D, frame_spacing: float) -> PathSegment:
    """Discretize the segment start->end into uniform steps.

    n = ceil(dist / frame_spacing), so the true step never exceeds the
    configured spacing. Pose j has v_j = v_start + j * (v_end -
    v_start)/n per component; the angular difference is taken along the
    shortest arc. The final pose is the exact end pose.
    """
    if frame_spacing <= 0:
        raise GenerationError(f"frame_spacing must be > 0, got {frame_spacing}")
    delta_pos = end.position - start.position
    dist = float(np.linalg.norm(delta_pos))
    if dist <= 1e-9:
        raise GenerationError("interpolate_path requires distinct endpoints")
    n = max(1, math.ceil(dist / frame_spacing))
    step_pos = delta_pos / n
    step_ang = np.array(
        [wrap_angle(e - s) / n for s, e in zip(start.angles, end.angles)]
    )
    poses = []
    for j in range(1, n):
        p = start.position + j * step_pos
        a = start.angles + j * step_ang
        poses.append(Pose6D(p[0], p[1], p[2], a[0], a[1], a[2]))
    poses.append(end)
    return PathSegment(start=start, end=end, frame_spacing=frame_spacing,
                       poses=tuple(poses))


@dataclass(frozen=True)
class GenerationConfig:
    total_frames: int
    bounds: SamplingBounds
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    k: int = 16
    frame_spacing: float = 0.02
    master_seed: int = 0

    def __post_init__(self):
        if self.total_frames < 1:
            raise GenerationError("total_frames must be >= 1")
        if self.frame_spacing <= 0:
            raise GenerationError("frame_spacing must be > 0")
        if self.k < 1:
            raise GenerationError("k must be >= 1")


@dataclass
class GenerationReport:
    """Provenance and diagnostics for one generation run."""

    master_seed: int
    total_frames_requested: int
    frames_emitted: int = 0
    paths_generated: int = 0
    rejected_collision: int = 0
    rejected_clearance: int = 0
    resamples: int = 0
    elapsed_seconds: float = 0.0
    frames_per_second: float = 0.0
    path_frame_counts: list[int] = field(default_factory=list)
    # post-hoc per-frame flag: forward clearance above the threshold
    clearance_flags: list[bool] = field(default_factory=list)
    config_echo: dict = field(default_factory=dict)

    @property
    def clearance_ok_fraction(self) -> float:
        if not self.clearance_flags:
            return 1.0
        return sum(self.clearance_flags) / len(self.clearance_flags)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["clearance_ok_fraction"] = self.clearance_ok_fraction
        return d

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)


def _find_initial_pose(bvh: BvhIndex, mesh: TexturedMesh,
                       cfg: GenerationConfig) -> Pose6D:
    for attempt in range(cfg.selection.resample_limit):
        kk = cfg.k * (2 ** attempt)
        rng = make_rng(cfg.master_seed, 0, attempt)
        cands = sample_candidates(cfg.bounds, kk, rng, (cfg.master_seed, 0, attempt))
        for cand in cands:
            if is_valid_initial_pose(bvh, mesh, cand, cfg.selection):
                return cand
    raise GenerationError(
        "could not find a valid initial pose "
        f"after {cfg.selection.resample_limit} candidate sets"
    )


def _select_next_target(bvh: BvhIndex, mesh: TexturedMesh, current: Pose6D,
                        cfg: GenerationConfig, path_index: int,
                        counts: FilterCounts, report: GenerationReport) -> Pose6D:
    for attempt in range(cfg.selection.resample_limit):
        kk = cfg.k * (2 ** attempt)
        rng = make_rng(cfg.master_seed, 1 + path_index, attempt)
        cands = sample_candidates(
            cfg.bounds, kk, rng, (cfg.master_seed, 1 + path_index, attempt)
        )
        admissible = filter_admissible(cands, current, bvh, mesh,
                                       cfg.selection, counts)
        if admissible:
            return select_target(admissible, current)
        report.resamples += 1
    raise SelectionError(
        f"path {path_index}: no admissible target after "
        f"{cfg.selection.resample_limit} resamples "
        f"(rejected {counts.rejected_collision} for collision, "
        f"{counts.rejected_clearance} for clearance); scene too constrained"
    )


def generate_paths(bvh: BvhIndex, mesh: TexturedMesh, cfg: GenerationConfig,
                   sink: FrameSink) -> GenerationReport:
    """Run the sample -> select -> interpolate loop until total_frames
    poses have been emitted to the sink.

    Each path's endpoint becomes the next path's start, so consecutive
    paths are spatially continuous. The pose sequence depends only on
    the master seed and config.
    """
    report = GenerationReport(
        master_seed=cfg.master_seed,
        total_frames_requested=cfg.total_frames,
        config_echo={
            "k": cfg.k,
            "frame_spacing": cfg.frame_spacing,
            "viewpoint_clearance_min": cfg.selection.viewpoint_clearance_min,
            "resample_limit": cfg.selection.resample_limit,
        },
    )
    counts = FilterCounts()
    t0 = time.perf_counter()

    current = _find_initial_pose(bvh, mesh, cfg)
    frame_index = 0
    path_index = 0
    while frame_index < cfg.total_frames:
        target = _select_next_target(bvh, mesh, current, cfg, path_index,
                                     counts, report)
        segment = interpolate_path(current, target, cfg.frame_spacing)
        emitted = 0
        for pose in segment.poses:
            sink(pose, path_index, frame_index)
            report.clearance_flags.append(
                viewpoint_clearance(bvh, mesh, pose)
                > cfg.selection.viewpoint_clearance_min
            )
            frame_index += 1
            emitted += 1
            if frame_index >= cfg.total_frames:
                break
        report.path_frame_counts.append(emitted)
        report.paths_generated += 1
        current = target
        path_index += 1

    report.frames_emitted = frame_index
    report.rejected_collision = counts.rejected_collision
    report.rejected_clearance = counts.rejected_clearance
    report.elapsed_seconds = time.perf_counter() - t0
    if report.elapsed_seconds > 0:
        report.frames_per_second = report.frames_emitted / report.elapsed_seconds
    return report
