"""6-DoF pose representation and rotation conversions.

Conventions used everywhere in this package:

* A pose is (x, y, z, roll, pitch, yaw) in meters/radians.
* Rotation matrix = Rz(yaw) @ Ry(pitch) @ Rx(roll) (intrinsic Z-Y-X).
* The camera body frame is x-forward, y-left, z-up; the local forward
  axis is +X. The renderer maps this to its optical frame internally.
* Angles are stored normalized to (-pi, pi].
* Matrix-to-Euler extraction is deliberately not provided (ambiguous at
  pitch = +/-pi/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TAU = 2.0 * math.pi

LOCAL_FORWARD = np.array([1.0, 0.0, 0.0])


class PoseError(ValueError):
    """Invalid pose, matrix, or quaternion input."""


def wrap_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    r = a % TAU
    if r > math.pi:
        r -= TAU
    return r


@dataclass(frozen=True)
class Pose6D:
    """Camera pose: position in meters, roll/pitch/yaw in radians."""

    x: float
    y: float
    z: float
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        vals = (self.x, self.y, self.z, self.roll, self.pitch, self.yaw)
        if not all(math.isfinite(v) for v in vals):
            raise PoseError(f"pose components must be finite, got {vals}")
        object.__setattr__(self, "roll", wrap_angle(self.roll))
        object.__setattr__(self, "pitch", wrap_angle(self.pitch))
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def angles(self) -> np.ndarray:
        return np.array([self.roll, self.pitch, self.yaw])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.roll, self.pitch, self.yaw])

    @staticmethod
    def from_array(v) -> "Pose6D":
        v = np.asarray(v, dtype=float)
        if v.shape != (6,):
            raise PoseError(f"expected 6 components, got shape {v.shape}")
        return Pose6D(*v.tolist())


@dataclass(frozen=True)
class UnitQuaternion:
    """Unit quaternion (w, x, y, z), canonicalized to w >= 0."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        n = math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)
        if abs(n - 1.0) > 1e-9:
            raise PoseError(f"quaternion norm {n} != 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def rotate(self, v) -> np.ndarray:
        """Rotate a 3-vector by this quaternion."""
        w, x, y, z = self.w, self.x, self.y, self.z
        q = np.array([x, y, z])
        v = np.asarray(v, dtype=float)
        t = 2.0 * np.cross(q, v)
        return v + w * t + np.cross(q, t)


def _rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=float)


def _rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=float)


def _rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=float)


def euler_to_rotation(p: Pose6D) -> np.ndarray:
    """3x3 rotation matrix for a pose (Rz(yaw) @ Ry(pitch) @ Rx(roll))."""
    return _rot_z(p.yaw) @ _rot_y(p.pitch) @ _rot_x(p.roll)


def euler_to_matrix(p: Pose6D) -> np.ndarray:
    """4x4 homogeneous body-to-world transform for a pose."""
    m = np.eye(4)
    m[:3, :3] = euler_to_rotation(p)
    m[:3, 3] = (p.x, p.y, p.z)
    return m


def validate_pose_matrix(m, tol: float = 1e-5) -> np.ndarray:
    """Check that m is a 4x4 rigid transform; returns it as float64."""
    m = np.asarray(m, dtype=float)
    if m.shape != (4, 4):
        raise PoseError(f"expected 4x4 matrix, got {m.shape}")
    if not np.allclose(m[3], [0, 0, 0, 1], atol=tol):
        raise PoseError("bottom row must be (0,0,0,1)")
    r = m[:3, :3]
    if not np.allclose(r @ r.T, np.eye(3), atol=tol):
        raise PoseError("rotation block is not orthonormal")
    if np.linalg.det(r) < 0:
        raise PoseError("rotation block has determinant -1 (reflection)")
    return m


def matrix_to_quaternion(m, tol: float = 1e-5) -> UnitQuaternion:
    """Extract the rotation of a 4x4 (or 3x3) matrix as a unit quaternion.

    The result is canonicalized to the w >= 0 hemisphere.
    """
    m = np.asarray(m, dtype=float)
    if m.shape == (4, 4):
        m = validate_pose_matrix(m, tol=tol)
        r = m[:3, :3]
    elif m.shape == (3, 3):
        r = m
        if not np.allclose(r @ r.T, np.eye(3), atol=tol):
            raise PoseError("rotation is not orthonormal")
    else:
        raise PoseError(f"expected 3x3 or 4x4, got {m.shape}")

    # Shepperd's method: pick the largest of the four candidates.
    t = np.trace(r)
    if t > 0:
        s = math.sqrt(t + 1.0) * 2
        w = 0.25 * s
        x = (r[2, 1] - r[1, 2]) / s
        y = (r[0, 2] - r[2, 0]) / s
        z = (r[1, 0] - r[0, 1]) / s
    elif r[0, 0] > r[1, 1] and r[0, 0] > r[2, 2]:
        s = math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2
        w = (r[2, 1] - r[1, 2]) / s
        x = 0.25 * s
        y = (r[0, 1] + r[1, 0]) / s
        z = (r[0, 2] + r[2, 0]) / s
    elif r[1, 1] > r[2, 2]:
        s = math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2
        w = (r[0, 2] - r[2, 0]) / s
        x = (r[0, 1] + r[1, 0]) / s
        y = 0.25 * s
        z = (r[1, 2] + r[2, 1]) / s
    else:
        s = math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2
        w = (r[1, 0] - r[0, 1]) / s
        x = (r[0, 2] + r[2, 0]) / s
        y = (r[1, 2] + r[2, 1]) / s
        z = 0.25 * s

    n = math.sqrt(w * w + x * x + y * y + z * z)
    w, x, y, z = w / n, x / n, y / n, z / n
    if w < 0:
        w, x, y, z = -w, -x, -y, -z
    return UnitQuaternion(w, x, y, z)


def quaternion_to_rotation(q: UnitQuaternion) -> np.ndarray:
    """3x3 rotation matrix of a unit quaternion."""
    w, x, y, z = q.w, q.x, q.y, q.z
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def forward_direction(p: Pose6D) -> np.ndarray:
    """World-frame unit vector the camera at p looks along (local +X)."""
    return euler_to_rotation(p) @ LOCAL_FORWARD
