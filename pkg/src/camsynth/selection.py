"""Admissibility filtering and target pose selection.

A candidate target is admissible iff
  (i)  the straight segment from the current pose to it is collision
       free: the first surface along that ray lies farther than the
       segment length, and
  (ii) the candidate's forward view clearance exceeds a threshold, so
       the rendered frame is not an ambiguous close-up of a surface.

Among admissible candidates, the one farthest (Euclidean, positions
only) from the current pose is selected; ties break to the earlier
candidate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh_io import TexturedMesh
from .pose_math import Pose6D
from .raycast import BvhIndex, Ray, distance_between_poses_ray, first_hit, viewpoint_clearance
from .sampling import CandidateSet

_PROBE_DIRECTIONS = np.array(
    [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)],
    dtype=float,
)
_INSIDE_GEOMETRY_CLEARANCE = 0.05


class SelectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class SelectionConfig:
    """viewpoint_clearance_min: minimum admissible forward clearance (m);
    resample_limit: candidate-set retries before the driver gives up."""

    viewpoint_clearance_min: float = 0.5
    resample_limit: int = 8

    def __post_init__(self):
        if not self.viewpoint_clearance_min > 0:
            raise ValueError("viewpoint_clearance_min must be > 0")
        if self.resample_limit < 1:
            raise ValueError("resample_limit must be >= 1")


@dataclass
class FilterCounts:
    rejected_collision: int = 0
    rejected_clearance: int = 0


def filter_admissible(candidates: CandidateSet, initial: Pose6D,
                      bvh: BvhIndex | None, mesh: TexturedMesh | None,
                      cfg: SelectionConfig,
                      counts: FilterCounts | None = None) -> list[Pose6D]:
    """Subset of candidates passing both admissibility clauses.

    Evaluation is per candidate and order independent; candidates
    coincident with the initial position are rejected as collisions.
    """
    if len(candidates) == 0:
        raise SelectionError("candidate set is empty")
    admissible = []
    for cand in candidates:
        seg = float(np.linalg.norm(cand.position - initial.position))
        if seg <= 1e-9:
            ok_segment = False  # degenerate zero-length path
        else:
            ok_segment = distance_between_poses_ray(bvh, mesh, initial, cand) > seg
        if not ok_segment:
            if counts is not None:
                counts.rejected_collision += 1
            continue
        if not viewpoint_clearance(bvh, mesh, cand) > cfg.viewpoint_clearance_min:
            if counts is not None:
                counts.rejected_clearance += 1
            continue
        admissible.append(cand)
    return admissible


def select_target(admissible: list[Pose6D], initial: Pose6D) -> Pose6D:
    """Farthest admissible pose from the initial position (first wins ties)."""
    if not admissible:
        raise SelectionError("no admissible candidates; resample needed")
    dists = [float(np.linalg.norm(p.position - initial.position)) for p in admissible]
    return admissible[int(np.argmax(dists))]


def pose_is_free(bvh: BvhIndex, mesh: TexturedMesh, p: Pose6D,
                 min_clearance: float = _INSIDE_GEOMETRY_CLEARANCE) -> bool:
    """6-direction probe: no surface within min_clearance in any axis
    direction. Used to vet the very first initial pose."""
    for d in _PROBE_DIRECTIONS:
        hit = first_hit(bvh, mesh, Ray(p.position, d, t_max=min_clearance))
        if hit is not None:
            return False
    return True


def is_valid_initial_pose(bvh: BvhIndex, mesh: TexturedMesh, p: Pose6D,
                          cfg: SelectionConfig) -> bool:
    """The first pose of the first path must see far enough ahead and
    must not sit inside geometry."""
    return (
        viewpoint_clearance(bvh, mesh, p) > cfg.viewpoint_clearance_min
        and pose_is_free(bvh, mesh, p)
    )
