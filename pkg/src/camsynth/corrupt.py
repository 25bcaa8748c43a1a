"""Calibrated ground-truth corruption and pose-error measurement.

Perturbations are applied independently per frame: a translation offset
with isotropic random direction and half-normal magnitude, and a
rotation about a uniformly random axis by a half-normal angle. The
half-normal scale is derived so its median equals the requested level,
and a post-draw multiplicative calibration rescales the drawn
magnitudes so the EMPIRICAL median hits the level exactly; the median
is the statistic datasets are labeled with, so the label is made exact
rather than left to sampling noise.

A level of exactly 0 applies no perturbation at all on that component,
leaving translations/rotations bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfinv

from .pose_math import matrix_to_quaternion
from .sampling import make_rng

# |N(0, sigma)| has median sigma * sqrt(2) * erfinv(1/2)
_HALF_NORMAL_MEDIAN_FACTOR = math.sqrt(2.0) * float(erfinv(0.5))


class CorruptionError(ValueError):
    pass


@dataclass(frozen=True)
class CorruptionSpec:
    """Target MEDIAN perturbation levels (meters / radians)."""

    target_median_position_error: float
    target_median_orientation_error: float
    seed: int = 0

    def __post_init__(self):
        if self.target_median_position_error < 0:
            raise CorruptionError("position target must be >= 0")
        if self.target_median_orientation_error < 0:
            raise CorruptionError("orientation target must be >= 0")


def _half_normal_magnitudes(rng, n: int, target_median: float) -> np.ndarray:
    sigma = target_median / _HALF_NORMAL_MEDIAN_FACTOR
    mags = np.abs(rng.normal(0.0, sigma, size=n))
    med = np.median(mags)
    if med > 0:
        mags *= target_median / med  # exact-median calibration
    return mags


def _random_unit_vectors(rng, n: int) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _axis_angle_matrices(axes: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """(n,3,3) Rodrigues rotation matrices."""
    n = len(axes)
    k = axes
    kx = np.zeros((n, 3, 3))
    kx[:, 0, 1] = -k[:, 2]
    kx[:, 0, 2] = k[:, 1]
    kx[:, 1, 0] = k[:, 2]
    kx[:, 1, 2] = -k[:, 0]
    kx[:, 2, 0] = -k[:, 1]
    kx[:, 2, 1] = k[:, 0]
    c = np.cos(angles)[:, None, None]
    s = np.sin(angles)[:, None, None]
    eye = np.broadcast_to(np.eye(3), (n, 3, 3))
    return eye * c + s * kx + (1 - c) * np.einsum("ni,nj->nij", k, k)


def corrupt_pose_matrices(poses: np.ndarray, spec: CorruptionSpec) -> np.ndarray:
    """Perturb an (n,4,4) stack of camera-to-world pose matrices.

    Reproducible bitwise from spec.seed. Position-only specs leave every
    rotation block untouched and vice versa.
    """
    poses = np.asarray(poses, dtype=float)
    if poses.ndim != 3 or poses.shape[1:] != (4, 4):
        raise CorruptionError(f"expected (n,4,4) poses, got {poses.shape}")
    n = len(poses)
    out = poses.copy()
    if n == 0:
        return out

    if spec.target_median_position_error > 0:
        rng = make_rng(spec.seed, 1)
        dirs = _random_unit_vectors(rng, n)
        mags = _half_normal_magnitudes(rng, n, spec.target_median_position_error)
        out[:, :3, 3] += dirs * mags[:, None]

    if spec.target_median_orientation_error > 0:
        rng = make_rng(spec.seed, 2)
        axes = _random_unit_vectors(rng, n)
        angles = _half_normal_magnitudes(rng, n, spec.target_median_orientation_error)
        out[:, :3, :3] = _axis_angle_matrices(axes, angles) @ out[:, :3, :3]
    return out


def corrupt_frames(frames, spec: CorruptionSpec):
    """Perturb the poses of a sequence of Frame records; images untouched."""
    from .dataset import Frame

    poses = np.stack([f.pose for f in frames]) if frames else np.empty((0, 4, 4))
    corrupted = corrupt_pose_matrices(poses, spec)
    return [
        Frame(index=f.index, rgb=f.rgb, depth=f.depth, pose=p)
        for f, p in zip(frames, corrupted)
    ]


def pose_errors(poses_a: np.ndarray, poses_b: np.ndarray):
    """Per-frame (position m, orientation rad) errors between two
    equally indexed (n,4,4) pose stacks.

    Orientation error is the geodesic angle 2*acos(|<q1,q2>|).
    """
    poses_a = np.asarray(poses_a, dtype=float)
    poses_b = np.asarray(poses_b, dtype=float)
    if poses_a.shape != poses_b.shape:
        raise CorruptionError(
            f"pose stacks differ in shape: {poses_a.shape} vs {poses_b.shape}"
        )
    pos_err = np.linalg.norm(poses_a[:, :3, 3] - poses_b[:, :3, 3], axis=1)
    ang_err = np.empty(len(poses_a))
    for i in range(len(poses_a)):
        qa = matrix_to_quaternion(poses_a[i, :3, :3]).as_array()
        qb = matrix_to_quaternion(poses_b[i, :3, :3]).as_array()
        dot = min(1.0, abs(float(qa @ qb)))
        ang_err[i] = 2.0 * math.acos(dot)
    return pos_err, ang_err


def measure_corruption(poses_a: np.ndarray, poses_b: np.ndarray) -> tuple[float, float]:
    """(median position error m, median orientation error rad)."""
    pos_err, ang_err = pose_errors(poses_a, poses_b)
    if len(pos_err) == 0:
        return 0.0, 0.0
    return float(np.median(pos_err)), float(np.median(ang_err))
