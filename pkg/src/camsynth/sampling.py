"""Uniform random sampling of candidate camera poses.

Each of the six pose components is drawn independently from a uniform
distribution over its range. The RNG is counter-based (numpy Philox)
keyed by (master_seed, stream), so per-path streams are independent of
each other and of thread scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mesh_io import Aabb
from .pose_math import Pose6D

# config-overridable defaults mimicking a handheld/robot camera
DEFAULT_ROLL_RANGE = (-math.radians(5.0), math.radians(5.0))
DEFAULT_PITCH_RANGE = (-math.radians(30.0), math.radians(30.0))
DEFAULT_YAW_RANGE = (-math.pi, math.pi)


class SamplingError(ValueError):
    pass


def make_rng(master_seed: int, *stream: int) -> np.random.Generator:
    """Philox generator for a (seed, stream...) key."""
    seq = np.random.SeedSequence([int(master_seed), *map(int, stream)])
    return np.random.Generator(np.random.Philox(seed=seq))


@dataclass(frozen=True)
class SamplingBounds:
    """Cartesian box plus per-angle ranges (radians) for pose sampling."""

    cartesian: Aabb
    roll_range: tuple[float, float] = DEFAULT_ROLL_RANGE
    pitch_range: tuple[float, float] = DEFAULT_PITCH_RANGE
    yaw_range: tuple[float, float] = DEFAULT_YAW_RANGE

    def __post_init__(self):
        for name, (lo, hi) in (
            ("roll_range", self.roll_range),
            ("pitch_range", self.pitch_range),
            ("yaw_range", self.yaw_range),
        ):
            if lo > hi:
                raise SamplingError(f"{name}: min {lo} > max {hi}")

    @staticmethod
    def from_mesh_bounds(bounds: Aabb, margin: float = 0.0,
                         roll_range=DEFAULT_ROLL_RANGE,
                         pitch_range=DEFAULT_PITCH_RANGE,
                         yaw_range=DEFAULT_YAW_RANGE) -> "SamplingBounds":
        box = bounds.shrink(margin) if margin > 0 else bounds
        return SamplingBounds(box, roll_range, pitch_range, yaw_range)

    @property
    def lows(self) -> np.ndarray:
        return np.array([*self.cartesian.min, self.roll_range[0],
                         self.pitch_range[0], self.yaw_range[0]])

    @property
    def highs(self) -> np.ndarray:
        return np.array([*self.cartesian.max, self.roll_range[1],
                         self.pitch_range[1], self.yaw_range[1]])

    def contains(self, p: Pose6D, atol: float = 1e-12) -> bool:
        v = p.as_array()
        return bool(np.all(v >= self.lows - atol) and np.all(v <= self.highs + atol))


@dataclass(frozen=True)
class CandidateSet:
    """Ordered candidate target poses plus the seed key that produced them."""

    poses: tuple[Pose6D, ...]
    seed_key: tuple[int, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.poses)

    def __iter__(self):
        return iter(self.poses)


def sample_candidates(bounds: SamplingBounds, k: int,
                      rng: np.random.Generator,
                      seed_key: tuple[int, ...] = ()) -> CandidateSet:
    """Draw k poses, each component ~ U[min, max] of its range."""
    if k < 1:
        raise SamplingError(f"k must be >= 1, got {k}")
    lo, hi = bounds.lows, bounds.highs
    # uniform() requires low < high; collapsed axes are constant
    raw = rng.uniform(size=(k, 6))
    samples = lo + raw * (hi - lo)
    poses = tuple(Pose6D(*row) for row in samples)
    return CandidateSet(poses=poses, seed_key=seed_key)
